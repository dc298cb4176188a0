/**
 * UI state machine for the synthesis page.
 *
 * Pure data + transition functions so the submit flow is testable without
 * a DOM. The machine enforces a single in-flight request: beginRequest()
 * refuses while pending, which is what collapses a double-click into one
 * network call.
 */

export type Emotion = "neutral" | "excited" | "very_excited";

export const EMOTIONS: readonly Emotion[] = ["neutral", "excited", "very_excited"];

export type RequestStatus =
  | { kind: "idle" }
  | { kind: "pending" }
  | { kind: "error"; message: string }
  | { kind: "done" };

export interface UiState {
  text: string;
  emotion: Emotion | null;
  status: RequestStatus;
  audioUrl: string | null;
  vowelized: string | null;
}

export const initialState: UiState = {
  text: "",
  emotion: null,
  status: { kind: "idle" },
  audioUrl: null,
  vowelized: null,
};

export function setText(state: UiState, text: string): UiState {
  return { ...state, text };
}

export function selectEmotion(state: UiState, emotion: Emotion | null): UiState {
  return { ...state, emotion };
}

export function canSubmit(state: UiState): boolean {
  return state.text.trim().length > 0 && state.status.kind !== "pending";
}

export function canPlay(state: UiState): boolean {
  return state.status.kind === "done" && state.audioUrl !== null;
}

/** Enter the pending state; returns null if a request is already running. */
export function beginRequest(state: UiState): UiState | null {
  if (!canSubmit(state)) {
    return null;
  }
  return { ...state, status: { kind: "pending" } };
}

export function requestSucceeded(
  state: UiState,
  audioUrl: string,
  vowelized: string,
): UiState {
  return { ...state, status: { kind: "done" }, audioUrl, vowelized };
}

export function requestFailed(state: UiState, message: string): UiState {
  return { ...state, status: { kind: "error", message } };
}
