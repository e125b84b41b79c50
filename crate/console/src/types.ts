// Response documents of the taxolint HTTP API (api version 1).

export interface ApiErrorDoc {
  api: 1;
  error: { code: string; message: string };
}

export interface RiskWeights {
  connection: number;
  coherence: number;
  depth_variance: number;
  alignment: number;
}

export interface RiskDoc {
  weights: RiskWeights;
  entity: string;
  p31_count: number;
  p279_count: number;
  dim_connection: number;
  dim_coherence: number;
  dim_depth_variance: number;
  dim_alignment: number;
  raw_parent_distances: number[];
  parent_depths: [string, number][];
  unreachable_parents: string[];
  depth_variance: number;
  cross_distance: unknown;
  aggregate: number;
}

export interface Narration {
  severity: "strength" | "issue";
  dimension: string;
  key: string;
  params: [string, string][];
  message: string;
}

export interface DriftDoc {
  entity: string;
  parent_cnt: number;
  min_depth: number | null;
  segment: string;
  drift_raw: number;
  drift_adj: number;
  flagged: boolean;
}

export interface EntitySummary {
  api: 1;
  qid: string;
  source: "snapshot" | "live";
  locale: string;
  label: string | null;
  description: string | null;
  text_language: string | null;
  parents: { instance_of: string[]; subclass_of: string[] };
  risk: RiskDoc | null;
  risk_error?: string | null;
  narrative: Narration[];
  drift: DriftDoc | null;
  flags: { tag: string; detail: string }[];
}

export interface RedundancyDoc {
  api: 1;
  qid: string;
  max_paths: number;
  redundant: { child: string; parent: string; witnesses: string[][] }[];
}

export interface SimilarityDoc {
  api: 1;
  qid: string;
  provider: string;
  labels: string[];
  matrix: number[][];
  omitted: string[];
}

export interface RootsDoc {
  api: 1;
  n: number;
  total: number;
  roots: { root: string; cnt: number; avg_drift: number; p90: number; high_ratio: number }[];
}

export interface HeatmapDoc {
  api: 1;
  groups: string[];
  bins: [number, number | null][];
  counts: number[][];
  total: number;
}

export interface CatalogDoc {
  api: 1;
  requested: string;
  locale: string;
  messages: Record<string, string>;
}

export interface SnapshotDoc {
  api: 1;
  data_dir: string;
  nodes: number;
  edges: number;
  texts: number;
  flagged_entities: number;
  drift_records: number | null;
  roots: number | null;
  live_fetch: boolean;
}

export type Stage = "risk" | "cme" | "drift";

export interface ScanSpec {
  entities?: string[];
  component?: number;
  stages?: Stage[];
}

export interface JobDoc {
  api: 1;
  id: string;
  spec: ScanSpec;
  state: "queued" | "running" | "done" | "failed";
  progress: number;
  result_path: string;
  rows: Record<string, number>;
  error?: string | null;
}
