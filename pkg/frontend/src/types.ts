/**
 * Wire types mirroring the engine service's JSON schemas.
 *
 * Numeric fields arrive at full precision and are displayed as-is: the
 * explorer never derives welfare numbers client-side.
 */

export interface DatasetSummary {
  dataset_id: string;
  name: string;
  size: number;
  labeled_share: number;
  outcome_summary: { mean: number; min: number; max: number };
}

export interface ScenarioSummary {
  population_size: number;
  labeled_share: number;
  outcome_direction: string;
  capacity: number;
  slots: number;
  utility: Record<string, unknown>;
  seed: number;
}

/** Envelope shared by every analysis response (and CLI result document). */
export interface ResultDocument<R> {
  schema_version: number;
  engine_version: string;
  config_hash: string;
  seed: number;
  analysis: string;
  scenario: ScenarioSummary;
  result: R;
  table?: Record<string, unknown>[];
  client_token?: string;
}

export interface EvaluateResult {
  welfare: number;
  random_baseline: number;
  perfect_baseline: number;
  welfare_ratio: number | null;
  slots: number;
  slots_used: number;
  fill_count: number;
  resolved_threshold: number | null;
  warnings: string[];
}

export interface BreakEvenPoint {
  theta: number;
  gain: number;
  gain_minus_benchmark: number;
  equivalent_cost: number | null;
}

export interface BreakEvenResult {
  lever: string;
  benchmark: string;
  theta_star: number | null;
  benchmark_gain: number;
  attained: boolean;
  rmse_parity_eta: number | null;
  points: BreakEvenPoint[];
}

export interface LeverSpend {
  lever_id: string;
  spend: number;
  theta: number;
}

export interface ResultingState {
  label_share: number;
  capacity: number;
  slots: number;
  benefit: number | null;
}

export interface OptimizeResult {
  budget: number;
  grid_resolution: number;
  baseline_welfare: number;
  total_welfare: number;
  welfare_gain: number;
  splits: LeverSpend[];
  resulting: ResultingState;
  manual?: {
    spends: number[];
    welfare: number;
    gain: number;
    deviation_loss: number;
    resulting: ResultingState;
  };
}

export interface JobTicket {
  job_id: string;
  status: string;
  config_hash?: string;
  client_token?: string;
}

export interface JobStatus {
  job_id: string;
  status: "pending" | "running" | "done" | "failed";
  result?: ResultDocument<unknown>;
  error?: { error: string; detail: string };
}

export interface ServiceError {
  error: string;
  detail: string;
}
