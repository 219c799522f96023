/** DOM wiring: renders the controller state verbatim and forwards events. */

import { ApiClient } from "./api.js";
import { ConsoleController, type ConsoleState } from "./console.js";
import type { PipelineConfig, PipelineTrace } from "./types.js";

const DEFAULT_CONFIG: PipelineConfig = {
  knowledge_backend: { kind: "echo", parameters: {} },
  response_backend: { kind: "template", parameters: { template: "I think: {k}" } },
  filter_beams: false,
};

const SAMPLE_EPISODE = {
  example_id: "nq-cowboys",
  turns: [
    { speaker: "user", text: "When did the dallas cowboys win their last playoff game?" },
  ],
  gold_answers: ["2014"],
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderTrace(trace: PipelineTrace, index: number): HTMLElement {
  const item = document.createElement("li");
  item.className = "trace";

  const response = document.createElement("p");
  response.className = "response";
  response.textContent = trace.response;
  item.appendChild(response);

  const meta = document.createElement("p");
  meta.className = "meta";
  const source = trace.injected_knowledge !== null ? "injected" : "predicted";
  meta.textContent = `probe ${index + 1} · knowledge (${source}): ${trace.knowledge_used}`;
  item.appendChild(meta);

  if (trace.filter_applied) {
    const badge = document.createElement("span");
    badge.className = trace.filter_hit ? "badge hit" : "badge miss";
    badge.textContent = trace.filter_hit
      ? `filter hit → beam ${trace.selected_index}`
      : "filter miss → top beam";
    item.appendChild(badge);
  }

  const beams = document.createElement("details");
  const summary = document.createElement("summary");
  summary.textContent = `${trace.beams.length} beams`;
  beams.appendChild(summary);
  const list = document.createElement("ol");
  trace.beams.forEach((beam, i) => {
    const row = document.createElement("li");
    row.textContent = `${beam.text}  (${beam.score})`;
    if (i === trace.selected_index) row.className = "selected";
    list.appendChild(row);
  });
  beams.appendChild(list);
  item.appendChild(beams);
  return item;
}

function main(): void {
  const episodeInput = el<HTMLTextAreaElement>("episode-json");
  const episodeFile = el<HTMLInputElement>("episode-file");
  const loadButton = el<HTMLButtonElement>("load");
  const topicHeader = el<HTMLHeadingElement>("topic");
  const contextList = el<HTMLUListElement>("context");
  const knowledgeInput = el<HTMLTextAreaElement>("knowledge");
  const editedFlag = el<HTMLSpanElement>("edited-flag");
  const slider = el<HTMLInputElement>("confidence");
  const sliderValue = el<HTMLSpanElement>("confidence-value");
  const probeButton = el<HTMLButtonElement>("probe");
  const historyList = el<HTMLOListElement>("history");
  const errorBox = el<HTMLDivElement>("error");
  const sessionLabel = el<HTMLSpanElement>("session-id");

  episodeInput.value = JSON.stringify(SAMPLE_EPISODE, null, 2);

  const baseUrl = new URLSearchParams(window.location.search).get("service") ?? "";
  const controller = new ConsoleController(new ApiClient(baseUrl), DEFAULT_CONFIG);

  function render(state: ConsoleState): void {
    sessionLabel.textContent = state.sessionId ?? "none";
    probeButton.disabled = state.pending || state.sessionId === null;
    loadButton.disabled = state.pending;
    sliderValue.textContent = String(state.confidence);
    editedFlag.hidden = !controller.knowledgeEdited;

    if (state.episode) {
      topicHeader.textContent = state.episode.topic ? `topic: ${state.episode.topic}` : "";
      contextList.replaceChildren(
        ...state.episode.turns.map((turn) => {
          const row = document.createElement("li");
          row.textContent = `${turn.speaker}: ${turn.text}`;
          return row;
        }),
      );
    }

    historyList.replaceChildren(...state.history.map(renderTrace));

    if (state.error) {
      errorBox.hidden = false;
      errorBox.textContent = state.error.message + (state.error.retryable ? " — retry?" : "");
    } else {
      errorBox.hidden = true;
    }
  }

  controller.onChange(render);

  loadButton.addEventListener("click", async () => {
    const ok = await controller.loadEpisode(episodeInput.value);
    if (ok) knowledgeInput.value = controller.state.knowledgeText;
  });

  episodeFile.addEventListener("change", async () => {
    const file = episodeFile.files?.[0];
    if (file) episodeInput.value = await file.text();
  });

  knowledgeInput.addEventListener("input", () => controller.setKnowledge(knowledgeInput.value));
  slider.addEventListener("input", () => controller.setConfidence(Number(slider.value)));
  probeButton.addEventListener("click", () => void controller.probe());

  render(controller.state);
}

main();
