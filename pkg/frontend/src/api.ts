// HTTP client for the service. Every request passes through one chokepoint
// and is appended to `audit`, so tests can assert what the UI actually sent
// (Guided mode must never submit expert-only fields, what-if movement must
// hit /whatif and nothing else).

import type {
  CapabilityDescriptor,
  DatasetDoc,
  DatasetSummaryDoc,
  ErrorEnvelope,
  JobDoc,
  LrpDoc,
  ModelDoc,
  ObjectiveSpecDoc,
  OptimizationRunDoc,
  ProgramDoc,
  QualityDoc,
  SessionDoc,
  WhatIfDoc,
  WorkflowStep,
} from "./types.js";

export interface AuditEntry {
  method: string;
  path: string;
  body: unknown;
}

export interface TransportResult {
  status: number;
  text: string;
}

export type Transport = (
  method: string,
  url: string,
  body: string | null,
  headers: Record<string, string>,
) => Promise<TransportResult>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly envelope: ErrorEnvelope,
  ) {
    super(envelope.message);
  }
}

const fetchTransport: Transport = async (method, url, body, headers) => {
  const response = await fetch(url, { method, body: body ?? undefined, headers });
  return { status: response.status, text: await response.text() };
};

export const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export class ApiClient {
  readonly audit: AuditEntry[] = [];
  pollIntervalMs = 1000;

  constructor(
    readonly base = "",
    private readonly transport: Transport = fetchTransport,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    this.audit.push({ method, path, body: body ?? null });
    const headers: Record<string, string> = {};
    let payload: string | null = null;
    if (body !== undefined) {
      payload = JSON.stringify(body);
      headers["content-type"] = "application/json";
    }
    const result = await this.transport(method, this.base + path, payload, headers);
    const doc = result.text ? JSON.parse(result.text) : {};
    if (result.status >= 400) {
      const envelope: ErrorEnvelope = doc.error ?? {
        code: "internal_error",
        key: "http.unexpected",
        message: `status ${result.status}`,
        field_path: null,
      };
      throw new ApiError(result.status, envelope);
    }
    return doc as T;
  }

  capabilities(): Promise<CapabilityDescriptor> {
    return this.request("GET", "/capabilities");
  }

  listPrograms(): Promise<{ programs: ProgramDoc[] }> {
    return this.request("GET", "/programs");
  }

  getProgram(id: string): Promise<ProgramDoc> {
    return this.request("GET", `/programs/${id}`);
  }

  countExecutions(
    programId: string,
    filter?: { time_from?: string; time_to?: string; tag_equals?: Record<string, string> },
  ): Promise<{ count: number }> {
    const params = new URLSearchParams({ program_id: programId, limit: "0" });
    if (filter?.time_from) params.set("time_from", filter.time_from);
    if (filter?.time_to) params.set("time_to", filter.time_to);
    for (const [key, value] of Object.entries(filter?.tag_equals ?? {})) {
      params.set(`tag.${key}`, value);
    }
    return this.request("GET", `/executions?${params.toString()}`);
  }

  createDataset(body: Record<string, unknown>): Promise<DatasetDoc> {
    return this.request("POST", "/datasets", body);
  }

  getDataset(id: string): Promise<DatasetDoc> {
    return this.request("GET", `/datasets/${id}`);
  }

  datasetQuality(id: string): Promise<QualityDoc> {
    return this.request("GET", `/datasets/${id}/quality`);
  }

  datasetSummary(id: string): Promise<DatasetSummaryDoc> {
    return this.request("GET", `/datasets/${id}/summary`);
  }

  listBaseModels(programId: string, signature?: string): Promise<{ models: ModelDoc[] }> {
    const query = signature
      ? `?program_id=${encodeURIComponent(programId)}&skill_signature=${encodeURIComponent(signature)}`
      : `?program_id=${encodeURIComponent(programId)}`;
    return this.request("GET", `/models/base${query}`);
  }

  startTraining(body: Record<string, unknown>): Promise<JobDoc> {
    return this.request("POST", "/models", body);
  }

  getModel(id: string): Promise<ModelDoc> {
    return this.request("GET", `/models/${id}`);
  }

  lrp(modelId: string, body: Record<string, unknown> = {}): Promise<LrpDoc> {
    return this.request("POST", `/models/${modelId}/lrp`, body);
  }

  startOptimization(body: Record<string, unknown>): Promise<JobDoc> {
    return this.request("POST", "/optimizations", body);
  }

  getOptimization(runId: string): Promise<OptimizationRunDoc> {
    return this.request("GET", `/optimizations/${runId}`);
  }

  whatIf(modelId: string, x: Record<string, number>, spec?: ObjectiveSpecDoc): Promise<WhatIfDoc> {
    const body: Record<string, unknown> = { model_id: modelId, x };
    if (spec) body.spec = spec;
    return this.request("POST", "/whatif", body);
  }

  getJob(id: string): Promise<JobDoc> {
    return this.request("GET", `/jobs/${id}`);
  }

  createSession(programId: string): Promise<SessionDoc> {
    return this.request("POST", "/sessions", { program_id: programId });
  }

  updateSession(
    id: string,
    patch: Partial<{ step: WorkflowStep; dataset_id: string; model_id: string; run_id: string }>,
  ): Promise<SessionDoc> {
    return this.request("POST", `/sessions/${id}`, patch);
  }

  /** Poll a job at the UI's 1 s cadence until it reaches a terminal state. */
  async waitForJob(id: string, onProgress?: (job: JobDoc) => void): Promise<JobDoc> {
    for (;;) {
      const job = await this.getJob(id);
      onProgress?.(job);
      if (job.state === "done" || job.state === "failed" || job.state === "cancelled") {
        return job;
      }
      await sleep(this.pollIntervalMs);
    }
  }
}
