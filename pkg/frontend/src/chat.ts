// Chat pane state and renderer.  Messages only ever come from inbox
// responses (verified upstream by the gateway's crypto layer); the store
// tracks the poll cursor and surfaces reject counters in a diagnostics
// footer instead of rendering dropped frames.

import { ChatMessageView, InboxResponse, escapeHtml } from "./model.js";

export class ChatStore {
  messages: ChatMessageView[] = [];
  cursor = 0;
  rejected = 0;
  malformed = 0;

  applyInbox(resp: InboxResponse): ChatMessageView[] {
    this.messages.push(...resp.messages);
    this.cursor = resp.cursor;
    this.rejected = resp.rejected;
    this.malformed = resp.malformed;
    return resp.messages;
  }
}

export function renderMessage(msg: ChatMessageView, self: string): string {
  const cls = msg.sender === self ? "sent" : "received";
  const body =
    msg.kind === "text" && msg.text !== null
      ? escapeHtml(msg.text)
      : `<em>[${escapeHtml(msg.kind)} payload]</em>`;
  return `<div class="msg ${cls} mode-${msg.mode}">
  <span class="sender">${escapeHtml(msg.sender)}</span>
  <span class="mode-tag">${msg.mode}</span>
  <p>${body}</p>
</div>`;
}

export function renderChatPane(store: ChatStore, self: string): string {
  const msgs = store.messages.map((m) => renderMessage(m, self)).join("\n");
  const diag =
    store.rejected || store.malformed
      ? `<footer class="diagnostics">dropped: ${store.rejected} rejected, ${store.malformed} malformed</footer>`
      : `<footer class="diagnostics ok">all received frames verified</footer>`;
  return `<div class="chat-pane">
<div class="messages">${msgs || '<p class="empty">no messages yet</p>'}</div>
${diag}
</div>`;
}
