/** Session view-state reducer: optimistic clicks, rollback, single in-flight
 * mutation, latest-wins coalescing for the budget slider. The server is the
 * single source of truth; every confirmed response replaces local state. */

import type { OverlayMode } from "./overlay.js";

export type Polarity = "fg" | "bg";

export interface ClickMarker {
  row: number;
  col: number;
  polarity: Polarity;
  i: number;
}

export interface ServerState {
  id: string;
  height: number;
  width: number;
  downscaled: boolean;
  clicks: ClickMarker[];
  refinements: { K: number; patches: unknown[] }[];
  refiner_available: boolean;
  uncertainty_available: boolean;
}

export interface ViewState {
  server: ServerState | null;
  overlay: OverlayMode;
  budgetK: number;
  pending: boolean;
  /** Markers drawn before the server confirms; null when in sync. */
  optimisticClicks: ClickMarker[] | null;
  /** Latest slider value requested while a mutation was in flight. */
  queuedK: number | null;
  error: string | null;
}

export const MAX_BUDGET = 32;

export function initialState(): ViewState {
  return {
    server: null,
    overlay: "image",
    budgetK: 8,
    pending: false,
    optimisticClicks: null,
    queuedK: null,
    error: null,
  };
}

/** Clicks to display: optimistic if a mutation is in flight, else server's. */
export function visibleClicks(state: ViewState): ClickMarker[] {
  if (state.optimisticClicks !== null) return state.optimisticClicks;
  return state.server ? state.server.clicks : [];
}

export function canMutate(state: ViewState): boolean {
  return state.server !== null && !state.pending;
}

/** Begin a click mutation, drawing the marker optimistically. */
export function beginClick(state: ViewState, row: number, col: number,
                           polarity: Polarity): ViewState {
  if (!canMutate(state)) throw new Error("mutation already in flight");
  const base = visibleClicks(state);
  const marker: ClickMarker = { row, col, polarity, i: base.length };
  return {
    ...state,
    pending: true,
    error: null,
    optimisticClicks: [...base, marker],
  };
}

/** Begin a non-click mutation (undo, refine): no optimistic marker. */
export function beginMutation(state: ViewState): ViewState {
  if (!canMutate(state)) throw new Error("mutation already in flight");
  return { ...state, pending: true, error: null };
}

/** Server responded: adopt its state verbatim and clear optimism. */
export function confirm(state: ViewState, server: ServerState): ViewState {
  return { ...state, server, pending: false, optimisticClicks: null, error: null };
}

/** Server errored: roll back to the last confirmed state and surface a toast. */
export function fail(state: ViewState, message: string): ViewState {
  return { ...state, pending: false, optimisticClicks: null, error: message };
}

export function setOverlay(state: ViewState, overlay: OverlayMode): ViewState {
  return { ...state, overlay };
}

/** Slider moves coalesce: while pending, remember only the latest value. */
export function setBudget(state: ViewState, k: number): ViewState {
  const clamped = Math.max(0, Math.min(MAX_BUDGET, Math.round(k)));
  if (state.pending) return { ...state, queuedK: clamped };
  return { ...state, budgetK: clamped, queuedK: null };
}

/** After a mutation settles, apply any queued slider value. */
export function drainQueuedBudget(state: ViewState): ViewState {
  if (state.pending || state.queuedK === null) return state;
  return { ...state, budgetK: state.queuedK, queuedK: null };
}
