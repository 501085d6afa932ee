// Model training step: base-model choice, descriptor-driven hyperparameter
// form (Guided shows only the non-expert fields), live job progress, then
// verdict, loss curves, held-out calibration and LRP relevance bars.

import { FormController } from "../forms.js";
import { lineChart, predictionScatter, relevanceBars } from "../charts.js";
import { clear, el, fmt, smooth } from "../util.js";
import { errorBanner } from "./context.js";
import type { StepContext, StepView } from "./context.js";
import type { JobDoc, ModelDoc } from "../types.js";

const TRAIN_COLOR = "#4063a8";
const VAL_COLOR = "#c77c2e";

export class TrainingStep implements StepView {
  readonly element: HTMLElement;
  private form: FormController;
  private baseList: HTMLElement;
  private startButton: HTMLButtonElement;
  private progress: HTMLElement;
  private results: HTMLElement;
  private showError: (error: unknown) => void;
  private modelId: string | null = null;
  private running = false;

  constructor(private readonly ctx: StepContext) {
    this.element = el("section", { class: "step step-training" });
    this.element.append(el("h2", { text: "2. Training" }));

    this.baseList = el("div", { class: "base-models" });
    this.form = new FormController(ctx.descriptor.steps.training, ctx.modeStore.mode);
    ctx.modeStore.onChange((mode) => this.form.setMode(mode));

    this.startButton = el("button", { type: "button", text: "Start training" });
    this.startButton.addEventListener("click", () => {
      void this.startTraining();
    });
    this.progress = el("p", { class: "job-progress hidden" });
    this.results = el("div", { class: "step-results" });

    this.element.append(this.baseList, this.form.element, this.startButton, this.progress);
    this.showError = errorBanner(this.element);
    this.element.append(this.results);
  }

  canAdvance(): boolean {
    return this.modelId !== null && !this.running;
  }

  blockedReason(): string | null {
    if (this.running) return "training in progress";
    if (this.modelId === null) return "train a model first";
    return null;
  }

  private async refreshBaseModels(): Promise<void> {
    const { models } = await this.ctx.api.listBaseModels(this.ctx.program.id);
    clear(this.baseList);
    if (models.length === 0) {
      this.baseList.append(el("p", { class: "muted", text: "no base models yet; training starts from scratch" }));
      return;
    }
    this.baseList.append(el("p", { text: "available base models:" }));
    for (const model of models) {
      const pick = el("button", { type: "button", class: "base-model", text: model.id });
      pick.addEventListener("click", () => {
        this.form.setValue("base_id", model.id);
        this.form.setValue("init", "finetune");
      });
      this.baseList.append(pick);
    }
  }

  private async startTraining(): Promise<void> {
    const mode = this.ctx.modeStore.mode;
    const datasetId = this.ctx.workflow.session.dataset_id;
    if (!datasetId) {
      this.showError(new Error("no dataset selected"));
      return;
    }
    const body: Record<string, unknown> = {
      dataset_id: datasetId,
      hyperparams: this.form.groupSubmission(mode, "train_hyperparams"),
    };
    const training = this.form.groupSubmission(mode, "training");
    if (typeof training.init === "string") body.init = training.init;
    if (typeof training.base_id === "string") body.base_id = training.base_id;

    this.running = true;
    this.startButton.disabled = true;
    this.progress.classList.remove("hidden");
    this.ctx.onStateChange();
    try {
      const job = await this.ctx.api.startTraining(body);
      const done = await this.ctx.api.waitForJob(job.id, (j) => this.renderProgress(j));
      if (done.state !== "done" || !done.result_id) {
        this.renderFailure(done);
        return;
      }
      this.modelId = done.result_id;
      await this.ctx.workflow.recordModel(this.modelId);
      this.showError(null);
      await this.renderModel(this.modelId);
    } catch (error) {
      this.showError(error);
    } finally {
      this.running = false;
      this.startButton.disabled = false;
      this.progress.classList.add("hidden");
      this.ctx.onStateChange();
    }
  }

  private renderProgress(job: JobDoc): void {
    let detail = `progress ${(job.progress * 100).toFixed(0)}%`;
    if ("epoch" in job.metrics && "total" in job.metrics) {
      detail = `epoch ${job.metrics.epoch}/${job.metrics.total}`;
      if ("train_loss" in job.metrics) detail += `, train loss ${fmt(job.metrics.train_loss, 1)}`;
    }
    this.progress.textContent = `${job.state}: ${detail}`;
  }

  /** A failed job renders through the same verdict panel the spec's
   * erroneous-training-data path uses. */
  private renderFailure(job: JobDoc): void {
    clear(this.results);
    const panel = el("div", { class: "verdict verdict-erroneous_training_data" }, [
      el("strong", { text: "erroneous training data" }),
      el("p", { text: job.error ? `${job.error.key}: ${job.error.message}` : "training failed" }),
    ]);
    this.results.append(panel);
  }

  private async renderModel(modelId: string): Promise<void> {
    const model = await this.ctx.api.getModel(modelId);
    clear(this.results);
    this.renderVerdict(model);
    this.renderLossCurves(model);
    if (model.val_pairs.length > 0) {
      this.results.append(
        el("h4", { text: "held-out cycle time: predicted vs actual" }),
        predictionScatter(model.val_pairs),
      );
      const metrics = model.training.metrics;
      if (metrics) {
        this.results.append(
          el("p", {
            class: "metrics",
            text:
              `held-out: success accuracy ${fmt(metrics.success_accuracy, 3)}, ` +
              `position rmse ${fmt(metrics.traj_rmse, 2)} mm, ` +
              `cycle time mae ${fmt(metrics.time_mae, 2)} s`,
          }),
        );
      }
    }
    await this.renderLrp(modelId);
  }

  private renderVerdict(model: ModelDoc): void {
    if (!model.verdict) return;
    const verdict = model.verdict;
    this.results.append(
      el("div", { class: `verdict verdict-${verdict.label}` }, [
        el("strong", { class: "verdict-label", text: verdict.label.replace(/_/g, " ") }),
        el("p", { class: "verdict-message", text: verdict.message }),
      ]),
    );
  }

  private renderLossCurves(model: ModelDoc): void {
    const log = model.training;
    if (log.train_loss.length === 0) return;
    this.results.append(el("h4", { text: "loss" }));
    if (this.ctx.modeStore.mode === "guided") {
      // one smoothed summary curve instead of raw train/val detail
      const window = Math.max(3, Math.floor(log.val_loss.length / 10));
      this.results.append(
        lineChart([{ values: smooth(log.val_loss, window), color: VAL_COLOR, label: "loss" }]),
      );
    } else {
      this.results.append(
        lineChart([
          { values: log.train_loss, color: TRAIN_COLOR, label: "train" },
          { values: log.val_loss, color: VAL_COLOR, label: "validation" },
        ]),
      );
    }
  }

  private async renderLrp(modelId: string): Promise<void> {
    const lrp = await this.ctx.api.lrp(modelId);
    this.results.append(el("h4", { text: "input relevance (at the dataset mean)" }));
    for (const head of this.ctx.descriptor.heads) {
      const bars = lrp.bars[head];
      if (!bars) continue;
      this.results.append(el("h5", { text: head.replace(/_/g, " ") }), relevanceBars(bars));
    }
  }

  async load(): Promise<void> {
    await this.refreshBaseModels();
    const ids = this.ctx.workflow.session.model_ids;
    if (ids.length > 0) {
      this.modelId = ids[ids.length - 1];
      await this.renderModel(this.modelId);
    }
    this.ctx.onStateChange();
  }
}
