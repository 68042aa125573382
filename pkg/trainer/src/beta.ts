/** Regularized incomplete beta function: the CDF of a Beta(p, q) variable. */

const LANCZOS_G = 7;
const LANCZOS_COEF = [
  0.99999999999980993, 676.5203681218851, -1259.1392167224028,
  771.32342877765313, -176.61502916214059, 12.507343278686905,
  -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7,
];

export function logGamma(x: number): number {
  if (x < 0.5) {
    // reflection formula
    return Math.log(Math.PI / Math.sin(Math.PI * x)) - logGamma(1 - x);
  }
  x -= 1;
  let acc = LANCZOS_COEF[0];
  for (let i = 1; i < LANCZOS_G + 2; i++) acc += LANCZOS_COEF[i] / (x + i);
  const t = x + LANCZOS_G + 0.5;
  return 0.5 * Math.log(2 * Math.PI) + (x + 0.5) * Math.log(t) - t + Math.log(acc);
}

/** Continued fraction for the incomplete beta (Lentz's algorithm). */
function betaContinuedFraction(a: number, b: number, x: number): number {
  const EPS = 1e-15;
  const TINY = 1e-300;
  const qab = a + b;
  const qap = a + 1;
  const qam = a - 1;
  let c = 1.0;
  let d = 1.0 - (qab * x) / qap;
  if (Math.abs(d) < TINY) d = TINY;
  d = 1.0 / d;
  let h = d;
  for (let m = 1; m <= 300; m++) {
    const m2 = 2 * m;
    let aa = (m * (b - m) * x) / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (Math.abs(d) < TINY) d = TINY;
    c = 1.0 + aa / c;
    if (Math.abs(c) < TINY) c = TINY;
    d = 1.0 / d;
    h *= d * c;
    aa = (-(a + m) * (qab + m) * x) / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (Math.abs(d) < TINY) d = TINY;
    c = 1.0 + aa / c;
    if (Math.abs(c) < TINY) c = TINY;
    d = 1.0 / d;
    const del = d * c;
    h *= del;
    if (Math.abs(del - 1.0) < EPS) return h;
  }
  throw new Error(`incomplete beta did not converge for a=${a} b=${b} x=${x}`);
}

/** CDF of Beta(p, q) at x in [0, 1]. */
export function betaCdf(x: number, p: number, q: number): number {
  if (!(p > 0) || !(q > 0)) {
    throw new Error(`beta shape parameters must be positive, got p=${p} q=${q}`);
  }
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  const front = Math.exp(
    logGamma(p + q) - logGamma(p) - logGamma(q) + p * Math.log(x) + q * Math.log(1 - x)
  );
  if (x < (p + 1) / (p + q + 2)) {
    return (front * betaContinuedFraction(p, q, x)) / p;
  }
  return 1 - (front * betaContinuedFraction(q, p, 1 - x)) / q;
}
