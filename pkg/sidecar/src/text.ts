/** Shared text primitives. Everything here is a pure function of its
 * input, which is what makes the whole server reproducible: no RNG, no
 * clocks, no per-process salt. */

/** Whitespace tokens, leading/trailing/repeated separators ignored. */
export function tokenize(text: string): string[] {
  return text.split(/\s+/u).filter((token) => token.length > 0);
}

/** Lowercase with whitespace runs collapsed to single spaces. */
export function normalize(text: string): string {
  return text.trim().replace(/\s+/gu, " ").toLowerCase();
}

/** FNV-1a over UTF-16 code units, as an unsigned 32-bit integer. */
export function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

/** Deterministic pseudo-uniform value in [0, 1). */
export function hash01(text: string): number {
  return fnv1a(text) / 2 ** 32;
}

export function clamp01(value: number): number {
  if (value < 0) return 0;
  if (value > 1) return 1;
  return value;
}
