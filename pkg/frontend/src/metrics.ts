/**
 * Client-side test metrics. These must agree with the server's metrics
 * module within 1e-6 on identical inputs (shared-formula contract), so the
 * formulas are transcribed verbatim rather than re-derived.
 */

export interface PrecisionAttempt {
  clickX: number;
  clickY: number;
  centerX: number;
  centerY: number;
  targetRadius: number;
}

export interface PrecisionResult {
  perAttemptScores: number[];
  averageScore: number;
}

/** Linear falloff: 100 at the target center, 0 at the circle edge. */
export function precisionScore(attempts: PrecisionAttempt[]): PrecisionResult {
  if (attempts.length === 0) {
    throw new Error("at least one attempt required");
  }
  const scores = attempts.map((a) => {
    const d = Math.hypot(a.clickX - a.centerX, a.clickY - a.centerY);
    return 100.0 * Math.max(0.0, 1.0 - d / a.targetRadius);
  });
  const avg = scores.reduce((s, v) => s + v, 0) / scores.length;
  return { perAttemptScores: scores, averageScore: avg };
}

/**
 * Average click rate from a speed test. The first click starts the clock,
 * so N clicks span N-1 intervals.
 */
export function speedTestCps(timestamps: number[]): number {
  if (timestamps.length < 2) {
    throw new Error("need at least two clicks to measure a rate");
  }
  const elapsed = timestamps[timestamps.length - 1] - timestamps[0];
  if (elapsed <= 0) {
    throw new Error("timestamps must span a positive interval");
  }
  return (timestamps.length - 1) / elapsed;
}
