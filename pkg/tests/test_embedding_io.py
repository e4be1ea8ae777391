import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tats.data import EmbeddingSequence
from tats.embedding_io import (
    hash_embed,
    hash_embed_texts,
    mean_center,
    pool_tokens,
    read_embeddings,
    read_embeddings_csv,
    write_embeddings,
)
from tats.errors import BadMagic, EmptyText, NonFinite, TruncatedPayload


class TestEmbeddingFile:
    def test_round_trip_is_f32_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        original = rng.normal(size=(17, 5))
        path = tmp_path / "e.tsemb"
        write_embeddings(original, path)
        loaded = read_embeddings(path)
        assert loaded.vectors.shape == (17, 5)
        assert np.array_equal(loaded.vectors, original.astype(np.float32))

    def test_write_read_write_is_byte_identical(self, tmp_path):
        rng = np.random.default_rng(1)
        original = rng.normal(size=(8, 3))
        p1, p2 = tmp_path / "a.tsemb", tmp_path / "b.tsemb"
        write_embeddings(original, p1)
        write_embeddings(read_embeddings(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.tsemb"
        path.write_bytes(b"XXXXXX" + b"\x00" * 16)
        with pytest.raises(BadMagic):
            read_embeddings(path)

    def test_truncated_payload(self, tmp_path):
        rng = np.random.default_rng(2)
        path = tmp_path / "t.tsemb"
        write_embeddings(rng.normal(size=(4, 4)), path)
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(TruncatedPayload):
            read_embeddings(path)

    def test_non_finite_payload(self, tmp_path):
        path = tmp_path / "nan.tsemb"
        import struct

        payload = struct.pack("<4f", 1.0, float("nan"), 2.0, 3.0)
        path.write_bytes(b"TSEMB1" + struct.pack("<II", 2, 2) + payload)
        with pytest.raises(NonFinite):
            read_embeddings(path)

    def test_header_is_little_endian(self, tmp_path):
        path = tmp_path / "h.tsemb"
        write_embeddings(np.zeros((3, 2)), path)
        raw = path.read_bytes()
        assert raw[:6] == b"TSEMB1"
        assert int.from_bytes(raw[6:10], "little") == 3
        assert int.from_bytes(raw[10:14], "little") == 2
        assert len(raw) == 14 + 4 * 3 * 2

    def test_csv_reader(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("1.0,2.0\n3.0,4.0\n")
        loaded = read_embeddings_csv(path)
        assert np.array_equal(loaded.vectors, [[1.0, 2.0], [3.0, 4.0]])


class TestPoolTokens:
    def test_average(self):
        assert np.array_equal(pool_tokens([[1.0, 3.0], [3.0, 1.0]]), [2.0, 2.0])

    def test_single_row(self):
        assert np.array_equal(pool_tokens([[5.0, 6.0]]), [5.0, 6.0])

    def test_empty(self):
        with pytest.raises(EmptyText):
            pool_tokens(np.zeros((0, 4)))


class TestMeanCenter:
    def test_basic(self):
        centered = mean_center(np.array([[1.0, 1.0], [3.0, 3.0]]))
        assert np.array_equal(centered.vectors, [[-1.0, -1.0], [1.0, 1.0]])

    def test_single_row_becomes_zero(self):
        centered = mean_center(np.array([[4.0, -2.0]]))
        assert np.array_equal(centered.vectors, [[0.0, 0.0]])

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        e = rng.normal(size=(10, 4))
        once = mean_center(e)
        twice = mean_center(once)
        assert np.allclose(once.vectors, twice.vectors, atol=1e-12)

    def test_column_means_vanish(self):
        rng = np.random.default_rng(4)
        centered = mean_center(rng.normal(size=(50, 8)))
        assert np.all(np.abs(centered.vectors.mean(axis=0)) < 1e-9)


class TestHashEmbed:
    def test_deterministic(self):
        a = hash_embed("interest rates rose sharply", 32, seed=1)
        b = hash_embed("interest rates rose sharply", 32, seed=1)
        assert np.array_equal(a, b)

    def test_seed_changes_vector(self):
        a = hash_embed("interest rates rose sharply", 32, seed=1)
        b = hash_embed("interest rates rose sharply", 32, seed=2)
        assert not np.array_equal(a, b)

    def test_empty_string_is_zero(self):
        assert np.array_equal(hash_embed("", 16), np.zeros(16))

    def test_unit_norm_when_nonzero(self):
        v = hash_embed("a b c d e", 64, seed=0)
        assert np.linalg.norm(v) == pytest.approx(1.0)

    def test_related_texts_not_identical(self):
        a = hash_embed("rate rises", 64, seed=0)
        b = hash_embed("rate falls", 64, seed=0)
        cos = float(a @ b)
        assert cos < 0.9

    def test_known_reference_vector(self):
        # frozen reference: FNV-1a with seed folding, d=4
        v = hash_embed("alpha beta", 4, seed=7)
        assert np.linalg.norm(v) == pytest.approx(1.0)
        # recompute by hand with the documented hash
        from tats.embedding_io import _fnv1a

        expected = np.zeros(4)
        for token in ("alpha", "beta"):
            h = _fnv1a(token.encode(), 7)
            expected[h % 4] += -1.0 if (h >> 63) & 1 else 1.0
        expected /= np.linalg.norm(expected)
        assert np.array_equal(v, expected)

    @settings(max_examples=30)
    @given(text=st.text(max_size=60), d=st.integers(1, 64), seed=st.integers(0, 2**31))
    def test_pure_function(self, text, d, seed):
        assert np.array_equal(hash_embed(text, d, seed), hash_embed(text, d, seed))

    def test_batch_helper(self):
        seq = hash_embed_texts(["one", "two", "three"], 16, seed=0)
        assert isinstance(seq, EmbeddingSequence)
        assert seq.vectors.shape == (3, 16)
