import type { EntitySummary, RedundancyDoc, SimilarityDoc } from "./types.js";

export const LOCALES = ["en", "zh", "ja"] as const;
export type Locale = (typeof LOCALES)[number];

export const MAX_PATHS_MIN = 1;
export const MAX_PATHS_MAX = 64;
export const DEFAULT_MAX_PATHS = 4;

export interface ConsoleState {
  locale: Locale;
  qid: string;
  maxPaths: number;
  apiBase: string;
  entity?: EntitySummary;
  redundancy?: RedundancyDoc;
  similarity?: SimilarityDoc;
  error?: { status: number; code: string; message: string };
}

export function initialState(apiBase = ""): ConsoleState {
  return { locale: "en", qid: "", maxPaths: DEFAULT_MAX_PATHS, apiBase };
}

/** Clamp to the range the server accepts. Non-numbers fall back to the default. */
export function clampMaxPaths(value: unknown): number {
  const n = typeof value === "number" ? value : Number.parseInt(String(value), 10);
  if (!Number.isFinite(n)) return DEFAULT_MAX_PATHS;
  return Math.min(MAX_PATHS_MAX, Math.max(MAX_PATHS_MIN, Math.trunc(n)));
}

export function parseLocale(value: string): Locale {
  return (LOCALES as readonly string[]).includes(value) ? (value as Locale) : "en";
}

export function normalizeQid(input: string): string | undefined {
  const s = input.trim().toUpperCase();
  return /^Q[1-9][0-9]*$/.test(s) ? s : undefined;
}
