/** Browser entry point: launch form, live session view, knowledge tab.
 *
 * All state lives in the SessionView (a pure fold over the event stream)
 * plus the FeedbackControls ledger; the DOM is re-rendered from those on
 * every event. The only optimism is control disabling.
 */

import { ApiError, Client } from "./api.js";
import { barChart, scatterChart } from "./charts.js";
import { FeedbackControls, controlKey } from "./controls.js";
import type { SessionView } from "./types.js";
import {
  CLASSIFIERS,
  CRITERIA,
  PREPROCESSORS,
  buildTrainRequest,
  demoForm,
  validateLaunchForm,
  type LaunchForm,
} from "./validation.js";
import { applyEvent, emptyView } from "./viewmodel.js";

const client = new Client("");
let view: SessionView = emptyView();
let controls = new FeedbackControls();
let jobId: string | null = null;
let stopStream: (() => void) | null = null;
let toast = "";

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function checkboxGroup(name: string, values: readonly string[],
                       checked: string[]): string {
  return values.map((v) => `
    <label class="check">
      <input type="checkbox" name="${name}" value="${v}"
             ${checked.includes(v) ? "checked" : ""}> ${v}
    </label>`).join("");
}

function renderLaunchForm(form: LaunchForm, errors: { field: string; message: string }[] = []): void {
  const errorFor = (field: string) => {
    const hit = errors.filter((e) => e.field === field).map((e) => e.message);
    return hit.length ? `<span class="error">${hit.join("; ")}</span>` : "";
  };
  $("launch").innerHTML = `
    <h2>Launch a search</h2>
    <form id="launch-form">
      <label>Target column <input name="targetName" value="${form.targetName}">
        ${errorFor("targetName")}</label>
      <label>Dataset path (server-side) <input name="dataInput" value="${form.dataInput}">
        ${errorFor("dataInput")}</label>
      <label>Folds <input name="folds" type="number" value="${form.folds}">
        ${errorFor("folds")}</label>
      <fieldset><legend>Candidate classifiers ${errorFor("candidateModels")}</legend>
        ${checkboxGroup("candidateModels", CLASSIFIERS, form.candidateModels)}
      </fieldset>
      <fieldset><legend>Candidate preprocessors ${errorFor("candidatePreprocessors")}</legend>
        ${checkboxGroup("candidatePreprocessors", PREPROCESSORS, form.candidatePreprocessors)}
      </fieldset>
      <label>Profiling episodes
        <input name="modelProfilingEpisode" type="number" value="${form.modelProfilingEpisode}">
        ${errorFor("modelProfilingEpisode")}</label>
      <label>Search episodes
        <input name="modelSearchEpisode" type="number" value="${form.modelSearchEpisode}">
        ${errorFor("modelSearchEpisode")}</label>
      <label>Criterion
        <select name="selectionCriteria">
          ${CRITERIA.map((c) => `<option ${c === form.selectionCriteria ? "selected" : ""}>${c}</option>`).join("")}
        </select></label>
      <label>Seed <input name="seed" type="number" value="${form.seed}">
        ${errorFor("seed")}</label>
      <div class="row">
        <button type="submit">Start</button>
        <button type="button" id="prefill">Prefill demo config</button>
      </div>
    </form>`;
  $("launch-form").addEventListener("submit", (e) => {
    e.preventDefault();
    void submitLaunch(readForm());
  });
  $("prefill").addEventListener("click", () => renderLaunchForm(demoForm()));
}

function readForm(): LaunchForm {
  const root = $("launch-form") as HTMLFormElement;
  const data = new FormData(root);
  const num = (name: string) => Number(data.get(name) ?? NaN);
  return {
    targetName: String(data.get("targetName") ?? ""),
    dataInput: String(data.get("dataInput") ?? ""),
    folds: num("folds"),
    candidateModels: data.getAll("candidateModels").map(String),
    candidatePreprocessors: data.getAll("candidatePreprocessors").map(String),
    modelProfilingEpisode: num("modelProfilingEpisode"),
    modelSearchEpisode: num("modelSearchEpisode"),
    selectionCriteria: String(data.get("selectionCriteria") ?? "accuracy"),
    minimumAccuracy: null,
    seed: num("seed"),
  };
}

async function submitLaunch(form: LaunchForm): Promise<void> {
  const errors = validateLaunchForm(form);
  if (errors.length) {
    renderLaunchForm(form, errors);
    return;
  }
  try {
    const handle = await client.trainClassifier(buildTrainRequest(form));
    jobId = handle.jobId;
    view = emptyView(form.selectionCriteria);
    controls = new FeedbackControls();
    toast = `job ${handle.jobId} accepted`;
    stopStream?.();
    stopStream = client.streamEvents(handle.jobId, (event) => {
      applyEvent(view, event);
      const resolved = controls.onEvent(event);
      if (resolved) toast = `feedback applied: ${resolved}`;
      renderSession();
    });
    renderSession();
  } catch (error) {
    if (error instanceof ApiError) renderLaunchForm(form, error.errors);
    else throw error;
  }
}

async function sendFeedback(kind: string, extra: Record<string, unknown>,
                            target = ""): Promise<void> {
  if (!jobId) return;
  const key = controlKey(kind, target);
  try {
    const ack = await client.submitFeedback(jobId, { kind, ...extra });
    controls.submitted(key, ack.feedbackId);
    toast = `queued ${kind} (${ack.feedbackId})`;
  } catch (error) {
    if (error instanceof ApiError) {
      controls.rejected(key, error.message);
      toast = `rejected: ${error.message}`;
    } else throw error;
  }
  renderSession();
}

function feedbackButton(kind: string, target: string, label: string): string {
  const key = controlKey(kind, target);
  const state = controls.state(key);
  const disabled = controls.isDisabled(key) ? "disabled" : "";
  const reason = state.reason ? ` title="${state.reason}"` : "";
  return `<button class="feedback ${state.status}" data-kind="${kind}" ` +
         `data-target="${target}" ${disabled}${reason}>${label}</button>`;
}

function renderSession(): void {
  const root = $("session");
  if (!jobId) {
    root.innerHTML = "<p>No live session. Launch one above.</p>";
    return;
  }
  const p1buttons = view.phase1.bars.map((bar) =>
    `<div class="bar-row">${bar.key}
       ${feedbackButton("removeClassifier", bar.key, "remove")}</div>`).join("");
  const p2buttons = view.phase2.bars.map((bar) =>
    `<div class="bar-row">${bar.key}
       ${feedbackButton("removePreprocessor", bar.key, "remove")}</div>`).join("");
  const best = view.best;
  root.innerHTML = `
    <h2>Session ${view.sessionId ?? ""} <span class="state ${view.jobState}">${view.jobState}</span></h2>
    <p class="toast">${toast}</p>
    ${view.error ? `<p class="error">${view.error}</p>` : ""}
    <div class="cards">
      <div class="card">
        <h3>Best so far</h3>
        ${best ? `<p><b>${best.classifier ?? "?"}</b> + ${best.preprocessor ?? "?"}</p>
                  <p>${view.criterion}: ${best.value === null ? "-" : best.value.toFixed(4)}
                  ${best.final ? "(final)" : ""}</p>` : "<p>nothing measured yet</p>"}
      </div>
      <div class="card">
        <h3>Controls</h3>
        ${feedbackButton("cancelCurrentPipeline", "", "cancel current pipeline")}
        ${feedbackButton("stopPhase", "", "stop phase")}
        ${feedbackButton("stopAll", "", "stop all")}
      </div>
    </div>
    ${barChart(view.phase1.bars, `Phase 1: classifiers (${view.criterion})`, view.phase1.winner)}
    <div class="button-col">${p1buttons}</div>
    ${barChart(view.phase2.bars, `Phase 2: preprocessors (${view.criterion})`, view.phase2.winner)}
    <div class="button-col">${p2buttons}</div>
    ${scatterChart(view.sweep.points, `Phase 3: sweep (${view.criterion})`)}
    <h3>Feedback log</h3>
    <ul>${view.feedbackLog.map((f) =>
      `<li>#${f.seq} ${f.kind} ${JSON.stringify(f.diff)}</li>`).join("")}</ul>
  `;
  root.querySelectorAll("button.feedback").forEach((button) => {
    button.addEventListener("click", () => {
      const kind = button.getAttribute("data-kind") ?? "";
      const target = button.getAttribute("data-target") ?? "";
      const extra: Record<string, unknown> = {};
      if (kind === "removeClassifier") extra.classifier = target;
      if (kind === "removePreprocessor") extra.preprocessor = target;
      void sendFeedback(kind, extra, target);
    });
  });
  renderEntities();
}

function renderEntities(): void {
  const root = $("knowledge");
  const groups: Record<string, string[]> = { plan: [], evaluation: [], model: [] };
  for (const entity of view.entities) {
    groups[entity.kind]?.push(
      `<details><summary>${entity.id}: ${entity.label}</summary>
       <pre>${JSON.stringify(entity.detail, null, 2)}</pre></details>`);
  }
  root.innerHTML = `
    <h2>Knowledge graph</h2>
    <h3>Plans (${groups.plan.length})</h3>${groups.plan.join("")}
    <h3>Evaluations (${groups.evaluation.length})</h3>${groups.evaluation.join("")}
    <h3>Models (${groups.model.length})</h3>${groups.model.join("")}`;
}

export function start(): void {
  renderLaunchForm(demoForm());
  renderSession();
  renderEntities();
}

if (typeof document !== "undefined" && document.getElementById("launch")) {
  start();
}
