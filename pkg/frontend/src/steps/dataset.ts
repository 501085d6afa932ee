// Dataset definition step: filter executions, gate on quality, and explain
// the resulting dataset with box plots, a 3-D trajectory view and the force
// traces, all colored by outcome.

import { FormController } from "../forms.js";
import { boxPlotRow, forcePlot, outcomeLegend, trajectoryPlot } from "../charts.js";
import { clear, el, fmt } from "../util.js";
import { errorBanner } from "./context.js";
import type { StepContext, StepView } from "./context.js";
import type { DatasetSummaryDoc } from "../types.js";

export class DatasetStep implements StepView {
  readonly element: HTMLElement;
  private form: FormController;
  private countNote: HTMLElement;
  private createButton: HTMLButtonElement;
  private results: HTMLElement;
  private showError: (error: unknown) => void;
  private matchCount = -1;
  private hasDataset = false;

  constructor(private readonly ctx: StepContext) {
    this.element = el("section", { class: "step step-dataset" });
    this.element.append(el("h2", { text: "1. Dataset" }));

    this.countNote = el("p", { class: "count-note", text: "" });
    this.form = new FormController(ctx.descriptor.steps.dataset, ctx.modeStore.mode);
    ctx.modeStore.onChange((mode) => this.form.setMode(mode));
    this.form.element.addEventListener("change", () => {
      void this.refreshCount();
    });

    this.createButton = el("button", { type: "button", text: "Create dataset" });
    this.createButton.addEventListener("click", () => {
      void this.createDataset();
    });

    this.results = el("div", { class: "step-results" });
    this.element.append(this.countNote, this.form.element, this.createButton);
    this.showError = errorBanner(this.element);
    this.element.append(this.results);
  }

  canAdvance(): boolean {
    return this.hasDataset;
  }

  blockedReason(): string | null {
    if (this.hasDataset) return null;
    if (this.matchCount === 0) return "no executions match this filter";
    return "create a dataset first";
  }

  private filterDoc(): { time_from?: string; time_to?: string; tag_equals?: Record<string, string> } {
    const filter: Record<string, unknown> = {};
    const from = this.form.value("time_from");
    const to = this.form.value("time_to");
    const tags = this.form.value("tag_equals");
    if (typeof from === "string") filter.time_from = from;
    if (typeof to === "string") filter.time_to = to;
    if (tags && typeof tags === "object" && Object.keys(tags).length > 0) filter.tag_equals = tags;
    return filter;
  }

  private async refreshCount(): Promise<void> {
    try {
      const result = await this.ctx.api.countExecutions(this.ctx.program.id, this.filterDoc());
      this.matchCount = result.count;
      this.countNote.textContent =
        result.count === 0
          ? "no executions match this filter"
          : `${result.count} matching executions`;
      this.countNote.classList.toggle("warning", result.count === 0);
      this.createButton.disabled = result.count === 0;
      this.showError(null);
    } catch (error) {
      this.showError(error);
    }
    this.ctx.onStateChange();
  }

  private async createDataset(): Promise<void> {
    const mode = this.ctx.modeStore.mode;
    const body: Record<string, unknown> = {
      program_id: this.ctx.program.id,
      filter: this.filterDoc(),
    };
    const values = this.form.submission(mode);
    if (typeof values.name === "string") body.name = values.name;
    if (typeof values.pad_length === "number") body.pad_length = values.pad_length;
    if (values.override === true) body.override = true;
    try {
      const dataset = await this.ctx.api.createDataset(body);
      await this.ctx.workflow.recordDataset(dataset.id);
      this.hasDataset = true;
      this.showError(null);
      await this.renderSummary(dataset.id);
    } catch (error) {
      this.showError(error);
    }
    this.ctx.onStateChange();
  }

  private async renderSummary(datasetId: string): Promise<void> {
    const summary = await this.ctx.api.datasetSummary(datasetId);
    clear(this.results);
    this.results.append(
      el("h3", { text: `dataset ${summaryTitle(summary)}` }),
      el("p", {
        class: "dataset-stats",
        text:
          `${summary.record_count} records (${summary.success_count} success / ` +
          `${summary.fail_count} failure), pad length ${summary.pad_length}, ` +
          `cycle time ${fmt(summary.cycle_time.min, 2)} to ${fmt(summary.cycle_time.max, 2)} s`,
      }),
    );
    this.results.append(el("h4", { text: "parameter distributions" }));
    for (const parameter of summary.parameters) {
      this.results.append(boxPlotRow(parameter, parameter.lower_bound, parameter.upper_bound));
    }

    const tracks = summary.plots.map((plot) => ({
      positions: plot.positions,
      forces: plot.forces,
      success: plot.success,
    }));
    this.results.append(
      el("h4", { text: "end-effector paths" }),
      trajectoryPlot(tracks),
      outcomeLegend(tracks),
      el("h4", { text: "force over time" }),
      forcePlot(tracks),
    );
  }

  async load(): Promise<void> {
    await this.refreshCount();
    const datasetId = this.ctx.workflow.session.dataset_id;
    if (datasetId) {
      this.hasDataset = true;
      await this.renderSummary(datasetId);
    }
    this.ctx.onStateChange();
  }
}

function summaryTitle(summary: DatasetSummaryDoc): string {
  return summary.name || summary.id;
}
