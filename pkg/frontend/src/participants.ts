// Participant panel: the contract's worker roster and the identity list
// served by the gateway's ids endpoint.

import { EventView, escapeHtml } from "./model.js";

export function renderParticipants(ev: EventView, ids: string[]): string {
  const rows = ev.participants
    .map(
      (w) =>
        `<tr><td class="mono">${escapeHtml(w.identity)}</td><td>${escapeHtml(w.entity)}</td><td class="mono">${escapeHtml(w.user)}</td></tr>`,
    )
    .join("\n");
  const idList = ids.map((i) => `<li class="mono">${escapeHtml(i)}</li>`).join("");
  return `<div class="participants">
<h3>participants (${ev.num_participants})</h3>
<table><thead><tr><th>identity</th><th>entity</th><th>address</th></tr></thead>
<tbody>${rows}</tbody></table>
<h4>contract identity list</h4>
<ul class="id-list">${idList}</ul>
</div>`;
}
