export function mean(values: number[]): number {
  if (values.length === 0) return 0
  let s = 0
  for (const v of values) s += v
  return s / values.length
}

export function sampleStd(values: number[]): number {
  const n = values.length
  if (n < 2) return 0
  const m = mean(values)
  let acc = 0
  for (const v of values) acc += (v - m) * (v - m)
  return Math.sqrt(acc / (n - 1))
}

/** Standard error of the mean: sample std / sqrt(n). */
export function standardError(values: number[]): number {
  if (values.length < 2) return 0
  return sampleStd(values) / Math.sqrt(values.length)
}

/** Deterministic 32-bit PRNG so rendered data series are reproducible. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0
  return () => {
    a = (a + 0x6d2b79f5) >>> 0
    let t = a
    t = Math.imul(t ^ (t >>> 15), t | 1)
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61)
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
}

export function quantile(sorted: number[], q: number): number {
  if (sorted.length === 0) return 0
  const pos = q * (sorted.length - 1)
  const lo = Math.floor(pos)
  const hi = Math.ceil(pos)
  const w = pos - lo
  return sorted[lo] * (1 - w) + sorted[hi] * w
}

/**
 * Percentile bootstrap confidence interval for the mean.
 * 1000 resamples by default, seeded for reproducibility.
 */
export function bootstrapCI(
  values: number[],
  resamples = 1000,
  level = 0.95,
  seed = 0,
): [number, number] {
  if (values.length === 0) return [0, 0]
  if (values.length === 1) return [values[0], values[0]]
  const rng = mulberry32(seed)
  const means: number[] = new Array(resamples)
  for (let r = 0; r < resamples; r++) {
    let s = 0
    for (let i = 0; i < values.length; i++) {
      s += values[Math.floor(rng() * values.length)]
    }
    means[r] = s / values.length
  }
  means.sort((a, b) => a - b)
  const alpha = 1 - level
  return [quantile(means, alpha / 2), quantile(means, 1 - alpha / 2)]
}
