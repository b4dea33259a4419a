// Shared types mirroring the gateway's JSON shapes, plus the contract
// state-machine rules that drive which action buttons are enabled.

export type EventState = "Created" | "Verified" | "Inactive";

export interface Worker {
  entity: string;
  user: string;
  identity: string;
  event_id: string;
}

export interface EventView {
  entity: string;
  generator: string;
  privacy_policy: string;
  event_id: string;
  lat: number;
  lon: number;
  kind: string;
  risk_level: number;
  state: EventState;
  participants: Worker[];
  num_participants: number;
  last_block_hash: string | null;
}

export interface ChatMessageView {
  sender: string;
  mode: "p2p" | "broadcast";
  kind: string;
  body: string;
  text: string | null;
}

export interface InboxResponse {
  messages: ChatMessageView[];
  cursor: number;
  rejected: number;
  malformed: number;
}

export const KIND_COLORS: Record<string, string> = {
  fire: "#d64541",
  climate: "#d39e00",
  seismic: "#8e44ad",
  volcanic: "#e67e22",
  flooding: "#2e77d0",
  pollution: "#5d6d7e",
  other: "#27ae60",
};

export function kindColor(kind: string): string {
  return KIND_COLORS[kind] ?? KIND_COLORS.other;
}

// Legal transitions: Created->Verified, Created->Inactive, Verified->Inactive.
export function canRatify(state: EventState): boolean {
  return state === "Created";
}

export function canAbort(state: EventState): boolean {
  return state === "Created";
}

export function canKill(state: EventState): boolean {
  return state !== "Inactive";
}

export function canTransition(from: EventState, to: EventState): boolean {
  if (from === to) return true; // risk-only updates keep the state
  return (
    (from === "Created" && to === "Verified") ||
    (from === "Created" && to === "Inactive") ||
    (from === "Verified" && to === "Inactive")
  );
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
