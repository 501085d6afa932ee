// Session-bound stepper over dataset -> training -> optimization. Navigation
// goes through the server (the session document is the source of truth), so
// re-entering a step always renders persisted state and Back never deletes
// anything: there is no delete call in the whole client.

import type { ApiClient } from "./api.js";
import type { SessionDoc, WorkflowStep } from "./types.js";
import { WORKFLOW_STEPS } from "./types.js";

export class Workflow {
  constructor(
    private readonly api: ApiClient,
    public session: SessionDoc,
  ) {}

  get step(): WorkflowStep {
    return this.session.current_step;
  }

  stepIndex(step: WorkflowStep = this.step): number {
    return WORKFLOW_STEPS.indexOf(step);
  }

  canGo(target: WorkflowStep): boolean {
    return Math.abs(this.stepIndex(target) - this.stepIndex()) <= 1;
  }

  nextStep(): WorkflowStep | null {
    const index = this.stepIndex();
    return index < WORKFLOW_STEPS.length - 1 ? WORKFLOW_STEPS[index + 1] : null;
  }

  previousStep(): WorkflowStep | null {
    const index = this.stepIndex();
    return index > 0 ? WORKFLOW_STEPS[index - 1] : null;
  }

  async goTo(target: WorkflowStep): Promise<SessionDoc> {
    this.session = await this.api.updateSession(this.session.id, { step: target });
    return this.session;
  }

  async recordDataset(datasetId: string): Promise<SessionDoc> {
    this.session = await this.api.updateSession(this.session.id, { dataset_id: datasetId });
    return this.session;
  }

  async recordModel(modelId: string): Promise<SessionDoc> {
    this.session = await this.api.updateSession(this.session.id, { model_id: modelId });
    return this.session;
  }

  async recordRun(runId: string): Promise<SessionDoc> {
    this.session = await this.api.updateSession(this.session.id, { run_id: runId });
    return this.session;
  }
}
