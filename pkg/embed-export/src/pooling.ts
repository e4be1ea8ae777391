/** Pooling over per-token hidden states. */

export function meanPool(tokenVectors: number[][] | Float32Array[]): Float32Array {
  if (tokenVectors.length === 0) {
    throw new Error("cannot pool zero token vectors");
  }
  const d = tokenVectors[0].length;
  const acc = new Float64Array(d);
  for (const vec of tokenVectors) {
    if (vec.length !== d) {
      throw new Error("token vectors must share a width");
    }
    for (let j = 0; j < d; j++) {
      acc[j] += vec[j];
    }
  }
  const out = new Float32Array(d);
  for (let j = 0; j < d; j++) {
    out[j] = acc[j] / tokenVectors.length;
  }
  return out;
}
