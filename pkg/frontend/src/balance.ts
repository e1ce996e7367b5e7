// Client-side mirror of the server's batch balancing schedule. Must stay
// bit-identical to the backend: both sides are pinned to the shared golden
// vector file (shared/balance_golden.json).

export interface BalanceParams {
  b: number;
  c: number;
  T1: number;
  T2: number;
}

export interface Allocation {
  nRepr: number;
  nInfo: number;
}

export function validateParams(p: BalanceParams): string | null {
  if (!Number.isInteger(p.b) || p.b < 1) return "batch size b must be a positive integer";
  if (!(p.c >= 0 && p.c <= 1)) return "confidence c must be in [0, 1]";
  if (!Number.isInteger(p.T1) || p.T1 < 0) return "T1 must be a non-negative integer";
  if (!Number.isInteger(p.T2) || p.T2 <= p.T1) return "need T1 < T2";
  return null;
}

export function balance(t: number, p: BalanceParams): Allocation {
  if (!Number.isInteger(t) || t < 1) throw new Error("iterations are counted from 1");
  const problem = validateParams(p);
  if (problem) throw new Error(problem);
  if (t < p.T1) return { nRepr: p.b, nInfo: 0 };
  if (t >= p.T2) return { nRepr: 0, nInfo: p.b };
  // round before ceil: b*c may land a hair above an integer in floats
  const shift = Math.ceil(Math.round(p.b * p.c * 1e9) / 1e9);
  const B = (t - p.T1 + shift) % p.b;
  return { nRepr: p.b - B, nInfo: B };
}
