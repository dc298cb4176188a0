/**
 * UI state machine for the synthesis page.
 *
 * Pure data + transition functions so the submit flow is testable without
 * a DOM. The machine enforces a single in-flight request: beginRequest()
 * refuses while pending, which is what collapses a double-click into one
 * network call.
 */
export const EMOTIONS = ["neutral", "excited", "very_excited"];
export const initialState = {
    text: "",
    emotion: null,
    status: { kind: "idle" },
    audioUrl: null,
    vowelized: null,
};
export function setText(state, text) {
    return { ...state, text };
}
export function selectEmotion(state, emotion) {
    return { ...state, emotion };
}
export function canSubmit(state) {
    return state.text.trim().length > 0 && state.status.kind !== "pending";
}
export function canPlay(state) {
    return state.status.kind === "done" && state.audioUrl !== null;
}
/** Enter the pending state; returns null if a request is already running. */
export function beginRequest(state) {
    if (!canSubmit(state)) {
        return null;
    }
    return { ...state, status: { kind: "pending" } };
}
export function requestSucceeded(state, audioUrl, vowelized) {
    return { ...state, status: { kind: "done" }, audioUrl, vowelized };
}
export function requestFailed(state, message) {
    return { ...state, status: { kind: "error", message } };
}
