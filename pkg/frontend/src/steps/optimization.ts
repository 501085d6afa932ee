// Optimization step: objective toggles (Guided) plus weights and optimizer
// hyperparameters (Expert), iteration overlay with the best highlighted and
// clickable points, before/after parameter table, and a what-if panel whose
// sliders issue debounced /whatif calls. Every rendered number comes from an
// API response; the client never re-computes model outputs.

import { FormController } from "../forms.js";
import { forcePlot, iterationChart, trajectoryPlot } from "../charts.js";
import { clear, debounce, el, fmt } from "../util.js";
import { errorBanner } from "./context.js";
import type { StepContext, StepView } from "./context.js";
import type { JobDoc, ObjectiveSpecDoc, OptimizationRunDoc, PredictionDoc } from "../types.js";

export const WHATIF_DEBOUNCE_MS = 150;

function table(headers: string[], rows: string[][]): HTMLTableElement {
  const head = el("tr", {}, headers.map((h) => el("th", { text: h })));
  const body = rows.map((cells) =>
    el("tr", {}, cells.map((c) => el("td", { text: c }))),
  );
  return el("table", { class: "data-table" }, [
    el("thead", {}, [head]),
    el("tbody", {}, body),
  ]);
}

export class OptimizationStep implements StepView {
  readonly element: HTMLElement;
  private form: FormController;
  private startButton: HTMLButtonElement;
  private progress: HTMLElement;
  private results: HTMLElement;
  private iterationDetail: HTMLElement;
  private whatIfHost: HTMLElement;
  private whatIfReadouts: HTMLElement;
  private whatIfCharts: HTMLElement;
  private showError: (error: unknown) => void;
  private run: OptimizationRunDoc | null = null;
  private running = false;
  private sliders = new Map<string, HTMLInputElement>();
  private readonly requestWhatIf: () => void;

  constructor(private readonly ctx: StepContext) {
    this.element = el("section", { class: "step step-optimization" });
    this.element.append(el("h2", { text: "3. Optimization" }));

    this.form = new FormController(ctx.descriptor.steps.optimization, ctx.modeStore.mode);
    ctx.modeStore.onChange((mode) => this.form.setMode(mode));

    this.startButton = el("button", { type: "button", text: "Start optimization" });
    this.startButton.addEventListener("click", () => {
      void this.startOptimization();
    });
    this.progress = el("p", { class: "job-progress hidden" });
    this.element.append(this.form.element, this.startButton, this.progress);
    this.showError = errorBanner(this.element);

    this.results = el("div", { class: "step-results" });
    this.iterationDetail = el("div", { class: "iteration-detail" });
    this.whatIfHost = el("div", { class: "whatif" });
    this.whatIfReadouts = el("div", { class: "whatif-readouts" });
    this.whatIfCharts = el("div", { class: "whatif-charts" });
    this.element.append(this.results, this.whatIfHost);

    this.requestWhatIf = debounce(() => {
      void this.issueWhatIf();
    }, WHATIF_DEBOUNCE_MS);
  }

  canAdvance(): boolean {
    return this.run !== null && !this.running;
  }

  blockedReason(): string | null {
    if (this.running) return "optimization in progress";
    if (this.run === null) return "run an optimization first";
    return null;
  }

  private modelId(): string | null {
    const ids = this.ctx.workflow.session.model_ids;
    return ids.length > 0 ? ids[ids.length - 1] : null;
  }

  private async startOptimization(): Promise<void> {
    const mode = this.ctx.modeStore.mode;
    const modelId = this.modelId();
    if (!modelId) {
      this.showError(new Error("train a model before optimizing"));
      return;
    }
    const body: Record<string, unknown> = {
      model_id: modelId,
      spec: this.form.groupSubmission(mode, "objective_spec"),
      hyperparams: this.form.groupSubmission(mode, "optimizer_hyperparams"),
    };
    // x_init is expert-only, so submission() only carries it in Expert mode
    const xInit = this.form.submission(mode).x_init;
    if (xInit && typeof xInit === "object" && !Array.isArray(xInit)) {
      const x: Record<string, number> = {};
      for (const [name, raw] of Object.entries(xInit)) {
        const value = Number(raw);
        if (Number.isFinite(value)) x[name] = value;
      }
      if (Object.keys(x).length > 0) body.x_init = x;
    }

    this.running = true;
    this.startButton.disabled = true;
    this.progress.classList.remove("hidden");
    this.ctx.onStateChange();
    try {
      const job = await this.ctx.api.startOptimization(body);
      const done = await this.ctx.api.waitForJob(job.id, (j) => this.renderProgress(j));
      if (done.state !== "done" || !done.result_id) {
        this.showError(done.error ?? new Error("optimization failed"));
        return;
      }
      await this.ctx.workflow.recordRun(done.result_id);
      const run = await this.ctx.api.getOptimization(done.result_id);
      this.showError(null);
      this.renderRun(run);
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
    if ("iteration" in job.metrics && "total" in job.metrics) {
      detail = `iteration ${job.metrics.iteration}/${job.metrics.total}`;
    }
    this.progress.textContent = `${job.state}: ${detail}`;
  }

  private renderRun(run: OptimizationRunDoc): void {
    this.run = run;
    clear(this.results);
    const totals = run.iterations.map((it) => it.total);
    this.results.append(
      el("h4", { text: "objective per iteration (click a point for its parameters)" }),
      iterationChart(totals, run.best_index, (i) => this.renderIteration(i)),
      this.iterationDetail,
      el("h4", { text: "before vs after" }),
      this.beforeAfterTable(run),
    );
    this.renderIteration(run.best_index);
    this.buildWhatIfPanel(run);
  }

  private renderIteration(index: number): void {
    if (!this.run) return;
    const iteration = this.run.iterations[index];
    clear(this.iterationDetail);
    const tag = index === this.run.best_index ? " (best)" : "";
    this.iterationDetail.append(
      el("h5", { text: `iteration ${index}${tag}, objective ${fmt(iteration.total)}` }),
      table(
        ["parameter", "value"],
        this.ctx.program.parameter_specs.map((spec) => [
          spec.name,
          `${fmt(iteration.x[spec.name])} ${spec.unit}`,
        ]),
      ),
    );
  }

  private beforeAfterTable(run: OptimizationRunDoc): HTMLTableElement {
    const rows = this.ctx.program.parameter_specs.map((spec) => {
      const before = run.x_init[spec.name];
      const after = run.x_best[spec.name];
      const delta = after - before;
      const span = spec.upper_bound - spec.lower_bound;
      return [
        `${spec.name} (${spec.unit})`,
        fmt(before),
        fmt(after),
        fmt(delta),
        `${((delta / span) * 100).toFixed(1)}% of range`,
      ];
    });
    return table(["parameter", "before", "after", "delta", "delta vs range"], rows);
  }

  private buildWhatIfPanel(run: OptimizationRunDoc): void {
    clear(this.whatIfHost);
    this.sliders.clear();
    this.whatIfHost.append(
      el("h4", { text: "what if" }),
      el("p", {
        class: "muted",
        text: "move a slider to re-evaluate the model at a new parameterization",
      }),
    );
    for (const spec of this.ctx.program.parameter_specs) {
      const value = run.x_best[spec.name] ?? run.x_init[spec.name];
      const slider = el("input", {
        type: "range",
        min: String(spec.lower_bound),
        max: String(spec.upper_bound),
        step: String((spec.upper_bound - spec.lower_bound) / 200),
        value: String(value),
        "data-parameter": spec.name,
      });
      const readout = el("span", { class: "slider-value", text: `${fmt(value)} ${spec.unit}` });
      slider.addEventListener("input", () => {
        readout.textContent = `${fmt(Number(slider.value))} ${spec.unit}`;
        this.requestWhatIf();
      });
      this.sliders.set(spec.name, slider);
      this.whatIfHost.append(
        el("label", { class: "form-row slider-row", "data-row": spec.name }, [
          el("span", { class: "form-label", text: spec.name.replace(/_/g, " ") }),
          slider,
          readout,
        ]),
      );
    }
    this.whatIfHost.append(this.whatIfReadouts, this.whatIfCharts);
    const best = run.iterations[run.best_index];
    this.renderWhatIfResult(best.prediction, best.objectives, best.total);
  }

  private sliderValues(): Record<string, number> {
    const x: Record<string, number> = {};
    for (const [name, slider] of this.sliders) x[name] = Number(slider.value);
    return x;
  }

  private async issueWhatIf(): Promise<void> {
    if (!this.run) return;
    // spec comes from the form, not the stored run, so a Guided-mode body
    // never carries expert-only weight fields
    const spec = this.form.groupSubmission(
      this.ctx.modeStore.mode,
      "objective_spec",
    ) as ObjectiveSpecDoc;
    try {
      const result = await this.ctx.api.whatIf(this.run.model_id, this.sliderValues(), spec);
      this.showError(null);
      this.renderWhatIfResult(result.prediction, result.objectives, result.total);
    } catch (error) {
      this.showError(error);
    }
  }

  private renderWhatIfResult(
    prediction: PredictionDoc,
    objectives: Record<string, number>,
    total: number,
  ): void {
    clear(this.whatIfReadouts);
    const forces = prediction.trajectory.samples.map((s) => s.f);
    const peak = forces.length > 0 ? Math.max(...forces) : 0;
    const readout = (label: string, key: string, value: number) =>
      el("p", { class: "readout", "data-readout": key }, [
        el("span", { class: "readout-label", text: label }),
        el("span", { class: "readout-value", text: fmt(value) }),
      ]);
    this.whatIfReadouts.append(
      readout("predicted cycle time (s)", "cycle_time", prediction.cycle_time),
      readout("predicted success probability", "success_probability", prediction.success_probability),
      readout("predicted peak force (N)", "peak_force", peak),
    );
    for (const [name, value] of Object.entries(objectives)) {
      this.whatIfReadouts.append(readout(`objective: ${name.replace(/_/g, " ")}`, `objective.${name}`, value));
    }
    this.whatIfReadouts.append(readout("objective total", "total", total));

    clear(this.whatIfCharts);
    const success = prediction.success_probability >= 0.5;
    const positions = prediction.trajectory.samples.map((s) => s.p);
    this.whatIfCharts.append(
      el("h5", { text: "predicted end-effector path" }),
      trajectoryPlot([{ positions, success }]),
      el("h5", { text: "predicted force over time" }),
      forcePlot([{ forces, success }]),
    );
  }

  async load(): Promise<void> {
    this.startButton.disabled = this.modelId() === null;
    const runIds = this.ctx.workflow.session.run_ids;
    if (runIds.length > 0) {
      const run = await this.ctx.api.getOptimization(runIds[runIds.length - 1]);
      this.renderRun(run);
    }
    this.ctx.onStateChange();
  }
}
