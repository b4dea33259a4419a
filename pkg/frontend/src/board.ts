// Event board renderers: a list with state/kind badges and action
// buttons, and an offline coordinate-grid map.  Pure string producers;
// every rendered field comes straight from a gateway response.

import {
  EventView,
  canAbort,
  canKill,
  canRatify,
  escapeHtml,
  kindColor,
} from "./model.js";

export function stateBadge(state: string): string {
  return `<span class="badge state-${state.toLowerCase()}">${state}</span>`;
}

export function kindBadge(kind: string): string {
  return `<span class="badge kind" style="background:${kindColor(kind)}">${escapeHtml(kind)}</span>`;
}

export function renderEventRow(ev: EventView, stale = false): string {
  const disabled = (allowed: boolean) => (allowed ? "" : " disabled");
  const blockRef = ev.last_block_hash ? ev.last_block_hash.slice(0, 10) : "-";
  return `<tr class="event-row${stale ? " stale" : ""}" data-event="${ev.event_id}">
  <td class="mono">${ev.event_id}</td>
  <td>${kindBadge(ev.kind)}</td>
  <td>${stateBadge(ev.state)}</td>
  <td class="risk">risk ${ev.risk_level}</td>
  <td class="mono">${ev.lat.toFixed(6)}, ${ev.lon.toFixed(6)}</td>
  <td>${ev.num_participants} staff</td>
  <td class="mono block-ref">${blockRef}</td>
  <td class="actions">
    <button data-action="ratify"${disabled(canRatify(ev.state))}>ratify</button>
    <button data-action="abort"${disabled(canAbort(ev.state))}>abort</button>
    <button data-action="kill"${disabled(canKill(ev.state))}>kill</button>
  </td>
</tr>`;
}

export function renderEventBoard(events: EventView[], stale = false): string {
  if (events.length === 0) {
    return `<p class="empty">no events on the ledger</p>`;
  }
  const rows = events.map((e) => renderEventRow(e, stale)).join("\n");
  return `<table class="event-board">
<thead><tr><th>event</th><th>kind</th><th>state</th><th>risk</th><th>location</th><th>staff</th><th>block</th><th>actions</th></tr></thead>
<tbody>
${rows}
</tbody>
</table>`;
}

// The map degrades to a plain coordinate grid: events are normalized into
// the viewbox with a small margin, no external tile service involved.
export function renderMap(events: EventView[], width = 420, height = 300): string {
  const live = events.filter((e) => e.state !== "Inactive");
  const grid: string[] = [];
  for (let i = 1; i < 6; i++) {
    const x = (width / 6) * i;
    const y = (height / 6) * i;
    grid.push(`<line x1="${x}" y1="0" x2="${x}" y2="${height}" class="grid"/>`);
    grid.push(`<line x1="0" y1="${y}" x2="${width}" y2="${y}" class="grid"/>`);
  }
  let markers = "";
  if (live.length > 0) {
    const lats = live.map((e) => e.lat);
    const lons = live.map((e) => e.lon);
    const pad = 0.15;
    const latSpan = Math.max(Math.max(...lats) - Math.min(...lats), 1e-4);
    const lonSpan = Math.max(Math.max(...lons) - Math.min(...lons), 1e-4);
    const toX = (lon: number) =>
      ((lon - Math.min(...lons)) / lonSpan) * width * (1 - 2 * pad) + width * pad;
    const toY = (lat: number) =>
      height - (((lat - Math.min(...lats)) / latSpan) * height * (1 - 2 * pad) + height * pad);
    markers = live
      .map(
        (e) => `<g class="marker" data-event="${e.event_id}">
  <circle cx="${toX(e.lon).toFixed(1)}" cy="${toY(e.lat).toFixed(1)}" r="9" fill="${kindColor(e.kind)}" class="marker-${e.state.toLowerCase()}"/>
  <text x="${toX(e.lon).toFixed(1)}" y="${(toY(e.lat) - 13).toFixed(1)}">${escapeHtml(e.kind)} (${e.risk_level})</text>
</g>`,
      )
      .join("\n");
  }
  return `<svg viewBox="0 0 ${width} ${height}" class="event-map" role="img">
${grid.join("\n")}
${markers}
</svg>`;
}
