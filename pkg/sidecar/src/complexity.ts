/** Lexical-complexity models.
 *
 * A model scores a token span of a sentence with a value in [0, 1],
 * higher meaning harder. Built-ins are self-contained surface models; a
 * path argument instead loads a JSON lexicon of word scores, with the
 * surface model as fallback for out-of-lexicon words.
 */

import { existsSync, readFileSync } from "node:fs";

import { clamp01, hash01, tokenize } from "./text";

export type ComplexityModel = (text: string, span: [number, number]) => number;

type TokenScorer = (token: string) => number;

const VOWEL_GROUPS = /[aeiouy]+/g;

function syllableGroups(word: string): number {
  const groups = word.match(VOWEL_GROUPS);
  return groups ? groups.length : 1;
}

/** Logistic over word length, syllable groups, and a hashed unigram
 * prior standing in for corpus frequency. Fixed weights, so the score is
 * a pure function of the token. */
function surfaceComplexity(token: string): number {
  const word = token.toLowerCase();
  const z =
    -2.6 + 0.21 * word.length + 0.48 * syllableGroups(word) + 1.2 * hash01(word);
  return 1 / (1 + Math.exp(-z));
}

function spanMean(score: TokenScorer): ComplexityModel {
  return (text, span) => {
    const tokens = tokenize(text);
    const [start, length] = span;
    if (start < 0 || length < 1 || start + length > tokens.length) {
      throw new RangeError(
        `span [${start}, ${length}] out of bounds for ${tokens.length} tokens`
      );
    }
    let total = 0;
    for (const token of tokens.slice(start, start + length)) {
      total += score(token);
    }
    return total / length;
  };
}

export const COMPLEXITY_MODELS: Record<string, () => ComplexityModel> = {
  surface: () => spanMean(surfaceComplexity),
  wordlen: () => spanMean((token) => Math.min(1, token.length / 14)),
};

function loadLexicon(path: string): ComplexityModel {
  const raw: unknown = JSON.parse(readFileSync(path, "utf-8"));
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new Error(`complexity lexicon ${path} must be a JSON object of word -> score`);
  }
  const table = new Map<string, number>();
  for (const [word, value] of Object.entries(raw)) {
    if (typeof value !== "number" || !Number.isFinite(value)) {
      throw new Error(`complexity lexicon ${path}: score for ${JSON.stringify(word)} is not a number`);
    }
    table.set(word.toLowerCase(), clamp01(value));
  }
  return spanMean((token) => table.get(token.toLowerCase()) ?? surfaceComplexity(token));
}

export function resolveComplexityModel(nameOrPath: string): ComplexityModel {
  const builtin = COMPLEXITY_MODELS[nameOrPath];
  if (builtin) return builtin();
  if (existsSync(nameOrPath)) return loadLexicon(nameOrPath);
  throw new Error(
    `unknown complexity model ${JSON.stringify(nameOrPath)}: ` +
      `not a built-in (${Object.keys(COMPLEXITY_MODELS).join(", ")}) and not a file`
  );
}
