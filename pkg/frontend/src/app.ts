// Application shell: creates the server-side session, mounts the three step
// views and wires the stepper navigation plus the Guided/Expert toggle.

import { ApiClient } from "./api.js";
import { ModeStore } from "./mode.js";
import { Workflow } from "./workflow.js";
import { DatasetStep } from "./steps/dataset.js";
import { TrainingStep } from "./steps/training.js";
import { OptimizationStep } from "./steps/optimization.js";
import { clear, el } from "./util.js";
import { WORKFLOW_STEPS } from "./types.js";
import type { StepContext, StepView } from "./steps/context.js";
import type { CapabilityDescriptor, ProgramDoc, UiMode, WorkflowStep } from "./types.js";

export class App {
  readonly views = new Map<WorkflowStep, StepView>();
  private stepHost: HTMLElement;
  private stepperItems = new Map<WorkflowStep, HTMLElement>();
  private backButton: HTMLButtonElement;
  private nextButton: HTMLButtonElement;
  private blockedNote: HTMLElement;
  private modeButton: HTMLButtonElement;

  constructor(
    root: HTMLElement,
    readonly api: ApiClient,
    readonly modeStore: ModeStore,
    readonly workflow: Workflow,
    descriptor: CapabilityDescriptor,
    program: ProgramDoc,
  ) {
    const ctx: StepContext = {
      api,
      modeStore,
      descriptor,
      program,
      workflow,
      onStateChange: () => this.refreshNav(),
    };
    this.views.set("dataset", new DatasetStep(ctx));
    this.views.set("training", new TrainingStep(ctx));
    this.views.set("optimization", new OptimizationStep(ctx));

    this.modeButton = el("button", { type: "button", class: "mode-toggle" });
    this.modeButton.addEventListener("click", () => modeStore.toggle());
    modeStore.onChange((mode) => this.renderModeButton(mode));
    this.renderModeButton(modeStore.mode);

    const header = el("header", {}, [
      el("h1", { text: "shadowopt" }),
      el("span", { class: "program-id", text: program.id }),
      this.modeButton,
    ]);

    const stepper = el("nav", { class: "stepper" });
    for (const step of WORKFLOW_STEPS) {
      const item = el("span", { class: "stepper-item", "data-step": step, text: step });
      this.stepperItems.set(step, item);
      stepper.append(item);
    }

    this.stepHost = el("main", { class: "step-host" });

    this.backButton = el("button", { type: "button", class: "nav-back", text: "Back" });
    this.backButton.addEventListener("click", () => {
      void this.goBack();
    });
    this.nextButton = el("button", { type: "button", class: "nav-next", text: "Next" });
    this.nextButton.addEventListener("click", () => {
      void this.goNext();
    });
    this.blockedNote = el("span", { class: "blocked-note" });
    const footer = el("footer", { class: "step-nav" }, [
      this.backButton,
      this.nextButton,
      this.blockedNote,
    ]);

    clear(root);
    root.append(header, stepper, this.stepHost, footer);
  }

  private renderModeButton(mode: UiMode): void {
    this.modeButton.textContent = `mode: ${mode}`;
    this.modeButton.dataset.mode = mode;
  }

  currentView(): StepView {
    return this.views.get(this.workflow.step)!;
  }

  refreshNav(): void {
    for (const [step, item] of this.stepperItems) {
      item.classList.toggle("active", step === this.workflow.step);
    }
    this.backButton.disabled = this.workflow.previousStep() === null;
    const next = this.workflow.nextStep();
    const view = this.currentView();
    if (next === null) {
      this.nextButton.disabled = true;
      this.blockedNote.textContent = "";
      return;
    }
    this.nextButton.disabled = !view.canAdvance();
    this.blockedNote.textContent = view.canAdvance() ? "" : (view.blockedReason() ?? "");
  }

  /** Mount the view for the session's current step and load persisted state. */
  async showStep(step: WorkflowStep): Promise<void> {
    const view = this.views.get(step)!;
    clear(this.stepHost);
    this.stepHost.append(view.element);
    this.refreshNav();
    await view.load();
    this.refreshNav();
  }

  async goNext(): Promise<void> {
    const target = this.workflow.nextStep();
    if (target === null || !this.currentView().canAdvance()) return;
    await this.workflow.goTo(target);
    await this.showStep(target);
  }

  /** Back only navigates; nothing created on later steps is deleted. */
  async goBack(): Promise<void> {
    const target = this.workflow.previousStep();
    if (target === null) return;
    await this.workflow.goTo(target);
    await this.showStep(target);
  }

  async start(): Promise<void> {
    await this.showStep(this.workflow.step);
  }
}

export async function initApp(
  root: HTMLElement,
  api: ApiClient = new ApiClient(),
  modeStore: ModeStore = new ModeStore(),
): Promise<App> {
  const descriptor = await api.capabilities();
  const { programs } = await api.listPrograms();
  if (programs.length === 0) {
    clear(root);
    root.append(
      el("p", {
        class: "error-banner",
        text: "no programs registered; ingest executions first",
      }),
    );
    throw new Error("no programs registered");
  }
  const program = programs[0];
  const session = await api.createSession(program.id);
  const workflow = new Workflow(api, session);
  const app = new App(root, api, modeStore, workflow, descriptor, program);
  await app.start();
  return app;
}
