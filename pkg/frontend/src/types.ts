// Document shapes as the service returns them. Only the fields the UI
// consumes are typed; unknown extras are tolerated everywhere.

export type UiMode = "guided" | "expert";

export type WorkflowStep = "dataset" | "training" | "optimization";

export const WORKFLOW_STEPS: WorkflowStep[] = ["dataset", "training", "optimization"];

export interface CapabilityField {
  name: string;
  group: string;
  type: "string" | "number" | "integer" | "boolean" | "choice" | "timestamp" | "tags" | "integer_list";
  default: unknown;
  bounds: [number, number] | string[] | null;
  expert_only: boolean;
  explanation_key: string;
}

export interface CapabilityDescriptor {
  steps: Record<WorkflowStep, CapabilityField[]>;
  heads: string[];
  verdicts: string[];
}

export interface ParameterSpecDoc {
  name: string;
  unit: string;
  lower_bound: number;
  upper_bound: number;
  skill: string;
  expert_only?: boolean;
}

export interface ProgramDoc {
  id: string;
  skill_sequence: string[];
  parameter_specs: ParameterSpecDoc[];
}

export interface TrajectorySample {
  p: [number, number, number];
  f: number;
}

export interface TrajectoryDoc {
  dt: number;
  samples: TrajectorySample[];
  success: boolean;
  skills: string[];
  tags: Record<string, string>;
  ts: string;
}

export interface ExecutionRecordDoc {
  program_id: string;
  parameters: Record<string, number>;
  trajectory: TrajectoryDoc;
}

export interface DatasetDoc {
  id: string;
  name: string;
  program_id: string;
  record_count: number;
  pad_length: number;
  quality_ok: boolean;
  created_at: string;
}

export interface Quartiles {
  q1: number;
  median: number;
  q3: number;
}

export interface ParameterQualityDoc {
  name: string;
  min: number;
  max: number;
  quartiles: Quartiles;
  coverage_ratio: number;
  distinct_values: number;
  sufficient: boolean;
  message_key: string;
  message: string;
}

export interface QualityDoc {
  per_parameter: ParameterQualityDoc[];
  outlier_indices: number[];
  outlier_fraction: number;
  success_count: number;
  fail_count: number;
  overall_ok: boolean;
}

export interface SummaryParameterDoc extends ParameterQualityDoc {
  unit: string;
  lower_bound: number;
  upper_bound: number;
}

export interface SummaryPlotDoc {
  index: number;
  success: boolean;
  dt: number;
  positions: [number, number, number][];
  forces: number[];
}

export interface DatasetSummaryDoc {
  id: string;
  name: string;
  program_id: string;
  record_count: number;
  success_count: number;
  fail_count: number;
  pad_length: number;
  mean_parameters: Record<string, number>;
  parameters: SummaryParameterDoc[];
  cycle_time: { min: number; mean: number; max: number };
  plots: SummaryPlotDoc[];
}

export interface JobDoc {
  id: string;
  kind: string;
  state: "queued" | "running" | "done" | "failed" | "cancelled";
  progress: number;
  metrics: Record<string, number>;
  result_id: string | null;
  error: ErrorEnvelope | null;
}

export interface TrainingLogDoc {
  train_loss: number[];
  val_loss: number[];
  metrics: Record<string, number> | null;
  aborted: boolean;
  abort_reason: string | null;
}

export interface VerdictDoc {
  label: string;
  explanation_key: string;
  message: string;
  evidence: Record<string, unknown>;
}

export interface ValPairDoc {
  cycle_time_pred: number;
  cycle_time_label: number;
  success_probability: number;
  success_label: boolean;
}

export interface ModelDoc {
  id: string;
  dataset_id: string;
  program_id: string;
  skill_signature: string;
  init: string;
  hyperparams: Record<string, unknown>;
  verdict: VerdictDoc | null;
  training: TrainingLogDoc;
  val_pairs: ValPairDoc[];
  created_at: string;
}

export interface PredictionDoc {
  trajectory: { dt: number; samples: TrajectorySample[] };
  cycle_time: number;
  success_probability: number;
}

export interface RelevanceBarDoc {
  parameter: string;
  relevance: number;
  normalized_magnitude: number;
}

export interface LrpDoc {
  probe_x: Record<string, number>;
  reports: Record<string, { output_value: number; conservation_residual: number }>;
  bars: Record<string, RelevanceBarDoc[]>;
}

export interface ObjectiveSpecDoc {
  cycle_time_enabled?: boolean;
  cycle_time_weight?: number;
  path_length_enabled?: boolean;
  path_length_weight?: number;
  success_enabled?: boolean;
  success_weight?: number;
  force_threshold_enabled?: boolean;
  force_threshold_weight?: number;
  force_threshold?: number | null;
}

export interface IterationDoc {
  x: Record<string, number>;
  prediction: PredictionDoc;
  objectives: Record<string, number>;
  total: number;
}

export interface OptimizationRunDoc {
  id: string;
  model_id: string;
  spec: ObjectiveSpecDoc;
  hp: { step_size: number; iterations: number; seed: number };
  x_init: Record<string, number>;
  iterations: IterationDoc[];
  best_index: number;
  x_best: Record<string, number>;
  created_at: string;
}

export interface WhatIfDoc {
  prediction: PredictionDoc;
  objectives: Record<string, number>;
  total: number;
}

export interface SessionDoc {
  id: string;
  program_id: string;
  target_skills: string[];
  current_step: WorkflowStep;
  dataset_id: string | null;
  model_ids: string[];
  run_ids: string[];
}

export interface ErrorEnvelope {
  code: string;
  key: string;
  message: string;
  field_path: string | null;
}
