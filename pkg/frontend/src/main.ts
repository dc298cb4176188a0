/**
 * DOM wiring for the synthesis page.
 *
 * setupApp() takes its document and side-effecting collaborators as
 * parameters so tests can drive the full submit flow with fakes; the
 * bottom of the file wires the real browser.
 */

import { checkHealth, synthesize, type FetchLike } from "./api.js";
import {
  beginRequest,
  canSubmit,
  initialState,
  requestFailed,
  requestSucceeded,
  selectEmotion,
  setText,
  type Emotion,
  type UiState,
} from "./state.js";

export interface AppDeps {
  doc: Document;
  baseUrl?: string;
  fetchFn?: FetchLike;
  createAudioUrl?: (blob: Blob) => string;
  revokeAudioUrl?: (url: string) => void;
  play?: (url: string) => void;
}

export interface App {
  getState(): UiState;
  submit(): Promise<void>;
  elements: {
    textInput: HTMLTextAreaElement;
    emotionSelect: HTMLSelectElement;
    submitButton: HTMLButtonElement;
    statusLine: HTMLElement;
    vowelizedEcho: HTMLElement;
    player: HTMLAudioElement;
  };
}

export function setupApp(deps: AppDeps): App {
  const doc = deps.doc;
  const baseUrl = deps.baseUrl ?? "";
  const fetchFn = deps.fetchFn ?? fetch;

  const textInput = doc.getElementById("text-input") as HTMLTextAreaElement;
  const emotionSelect = doc.getElementById("emotion-select") as HTMLSelectElement;
  const submitButton = doc.getElementById("submit-button") as HTMLButtonElement;
  const statusLine = doc.getElementById("status-line") as HTMLElement;
  const vowelizedEcho = doc.getElementById("vowelized-echo") as HTMLElement;
  const player = doc.getElementById("player") as HTMLAudioElement;

  const createAudioUrl = deps.createAudioUrl ?? ((blob) => URL.createObjectURL(blob));
  const revokeAudioUrl = deps.revokeAudioUrl ?? ((url) => URL.revokeObjectURL(url));
  const play =
    deps.play ??
    ((url: string) => {
      player.src = url;
      void player.play().catch(() => {
        // Autoplay can be blocked; the visible controls still work.
      });
    });

  let state: UiState = initialState;

  function render(): void {
    submitButton.disabled = !canSubmit(state);
    player.hidden = state.audioUrl === null;
    switch (state.status.kind) {
      case "idle":
        statusLine.textContent = "";
        break;
      case "pending":
        statusLine.textContent = "...";
        break;
      case "error":
        statusLine.textContent = state.status.message;
        break;
      case "done":
        statusLine.textContent = "";
        break;
    }
    statusLine.classList.toggle("error", state.status.kind === "error");
    vowelizedEcho.textContent = state.vowelized ?? "";
  }

  async function submit(): Promise<void> {
    const pending = beginRequest(state);
    if (pending === null) {
      return; // empty text or a request already in flight
    }
    state = pending;
    render();
    try {
      const result = await synthesize(baseUrl, state.text.trim(), state.emotion, fetchFn);
      const previous = state.audioUrl;
      const url = createAudioUrl(result.audio);
      state = requestSucceeded(state, url, result.vowelized);
      if (previous !== null) {
        revokeAudioUrl(previous);
      }
      render();
      play(url);
    } catch (err) {
      state = requestFailed(state, err instanceof Error ? err.message : String(err));
      render();
    }
  }

  textInput.addEventListener("input", () => {
    state = setText(state, textInput.value);
    render();
  });
  emotionSelect.addEventListener("change", () => {
    const value = emotionSelect.value;
    state = selectEmotion(state, value === "" ? null : (value as Emotion));
  });
  submitButton.addEventListener("click", () => {
    void submit();
  });
  textInput.addEventListener("keydown", (event: KeyboardEvent) => {
    if (event.key === "Enter" && (event.ctrlKey || event.metaKey)) {
      event.preventDefault();
      void submit();
    }
  });

  render();
  void checkHealth(baseUrl, fetchFn).then((ok) => {
    if (!ok) {
      state = requestFailed(state, "gateway unreachable");
      render();
    }
  });

  return {
    getState: () => state,
    submit,
    elements: { textInput, emotionSelect, submitButton, statusLine, vowelizedEcho, player },
  };
}

declare global {
  interface Window {
    foocttsApp?: App;
  }
}

function autoInit(): void {
  // Only boot on the real page; under test the harness mounts and wires
  // the DOM itself.
  if (document.getElementById("submit-button") !== null) {
    window.foocttsApp = setupApp({ doc: document });
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", autoInit);
  } else {
    autoInit();
  }
}
