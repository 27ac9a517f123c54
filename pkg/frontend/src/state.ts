/**
 * Scenario draft state and client-side range clamps.
 *
 * Every clamp is a strict subset of the engine's validation: a value a
 * control permits is never rejected by the service for range reasons.
 * The engine's open intervals (beta in (0,1), rho > 0) become closed
 * sub-intervals here.
 */

import { Json } from "./serialize.js";

export interface ScenarioDraft {
  datasetId: string | null;
  utilityKind: "partitioned" | "crra";
  beta: number;
  harmRatio: number;
  rho: number;
  benefit: number;
  capacity: number;
  deltaAlpha: number;
  eta: number;
  labelShare: number;
  maskPredicate: string | null;
  bandBandwidth: number | null;
  populationSize: number;
  seed: number;
}

export const LIMITS = {
  beta: { min: 0.001, max: 0.999 },
  harmRatio: { min: 0, max: 100 },
  rho: { min: 0.01, max: 20 },
  benefit: { min: 0, max: 1e9 },
  eta: { min: 0, max: 1 },
  labelShare: { min: 0, max: 1 },
  bandwidth: { min: 0.001, max: 1 },
} as const;

const clip = (value: number, min: number, max: number) =>
  Math.min(max, Math.max(min, value));

export const clampBeta = (v: number) => clip(v, LIMITS.beta.min, LIMITS.beta.max);
export const clampHarmRatio = (v: number) => clip(v, LIMITS.harmRatio.min, LIMITS.harmRatio.max);
export const clampRho = (v: number) => clip(v, LIMITS.rho.min, LIMITS.rho.max);
export const clampBenefit = (v: number) => clip(v, LIMITS.benefit.min, LIMITS.benefit.max);
export const clampEta = (v: number) => clip(v, LIMITS.eta.min, LIMITS.eta.max);
export const clampLabelShare = (v: number) => clip(v, LIMITS.labelShare.min, LIMITS.labelShare.max);
export const clampBandwidth = (v: number) => clip(v, LIMITS.bandwidth.min, LIMITS.bandwidth.max);

/** Engine needs floor(capacity * N) >= 1 and capacity <= 1. */
export function clampCapacity(value: number, populationSize: number): number {
  const min = Math.min(1, 1 / populationSize);
  return clip(value, min, 1);
}

/** Capacity increment keeping base + delta within (base, 1]. */
export function clampDeltaAlpha(value: number, capacity: number): number {
  const headroom = 1 - capacity;
  return clip(value, Math.min(1e-6, headroom), headroom);
}

export function defaultDraft(populationSize = 10_000): ScenarioDraft {
  return {
    datasetId: null,
    utilityKind: "partitioned",
    beta: 0.15,
    harmRatio: 0,
    rho: 3,
    benefit: 100,
    capacity: 0.1,
    deltaAlpha: 0.01,
    eta: 0.1,
    labelShare: 1,
    maskPredicate: null,
    bandBandwidth: null,
    populationSize,
    seed: 13,
  };
}

/** Engine-facing config fragment for the live evaluate panel. */
export function evaluateFragment(draft: ScenarioDraft): Json {
  const utility: Record<string, Json> =
    draft.utilityKind === "crra"
      ? { kind: "crra", rho: clampRho(draft.rho), benefit: clampBenefit(draft.benefit) }
      : {
          kind: "partitioned",
          beta: clampBeta(draft.beta),
          above_value: 1.0,
          harm_ratio: clampHarmRatio(draft.harmRatio),
        };
  const fragment: Record<string, Json> = {
    utility,
    constraint: { capacity: clampCapacity(draft.capacity, draft.populationSize) },
    policy: { seed: draft.seed },
    analysis: { kind: "evaluate" },
  };
  if (draft.datasetId !== null) fragment.dataset_id = draft.datasetId;
  return fragment;
}
