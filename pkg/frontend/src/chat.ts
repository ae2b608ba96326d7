// Chat view: renders the conversation, sends messages, and collects the
// exit rating. All dialog logic lives server-side; this class only mirrors
// server state into the DOM.

import { ChatApi, ReplyResponse } from "./api.js";

export interface ChatViewOptions {
  variant: string;
  debug: boolean; // show strategy/source badges on system bubbles
}

export class ChatView {
  readonly root: HTMLElement;
  private readonly api: ChatApi;
  private readonly options: ChatViewOptions;

  private sessionId: string | null = null;
  private sending = false;

  private messages!: HTMLElement;
  private input!: HTMLInputElement;
  private sendButton!: HTMLButtonElement;
  private banner!: HTMLElement;
  private notice!: HTMLElement;
  private ratingDialog!: HTMLElement;

  constructor(root: HTMLElement, api: ChatApi, options: ChatViewOptions) {
    this.root = root;
    this.api = api;
    this.options = options;
    this.render();
  }

  private render(): void {
    this.root.innerHTML = "";
    this.banner = el("div", "banner hidden");
    this.messages = el("div", "messages");
    this.notice = el("div", "notice hidden");
    this.notice.textContent =
      "You have heard the whole pitch! Feel free to keep chatting or rate the conversation.";

    this.input = document.createElement("input");
    this.input.className = "input";
    this.input.placeholder = "Type a message...";
    this.input.addEventListener("input", () => this.syncSendState());
    this.input.addEventListener("keydown", (event) => {
      if (event.key === "Enter") this.send();
    });

    this.sendButton = document.createElement("button");
    this.sendButton.className = "send";
    this.sendButton.textContent = "Send";
    this.sendButton.disabled = true;
    this.sendButton.addEventListener("click", () => this.send());

    const bar = el("div", "input-bar");
    bar.append(this.input, this.sendButton);

    this.ratingDialog = this.buildRatingDialog();

    this.root.append(this.banner, this.messages, this.notice, bar, this.ratingDialog);
  }

  private buildRatingDialog(): HTMLElement {
    const dialog = el("div", "rating hidden");
    const label = el("span", "rating-label");
    label.textContent = "How engaged were you? ";
    dialog.append(label);
    for (let score = 1; score <= 5; score += 1) {
      const button = document.createElement("button");
      button.className = "rating-button";
      button.dataset.score = String(score);
      button.textContent = String(score);
      button.addEventListener("click", () => this.submitRating(score));
      dialog.append(button);
    }
    return dialog;
  }

  async start(): Promise<void> {
    try {
      const created = await this.api.createSession(this.options.variant);
      this.sessionId = created.session_id;
      this.banner.classList.add("hidden");
      this.addSystemBubble(created.opener.text, created.opener.strategy_id,
        created.opener.source);
      this.syncSendState();
    } catch (err) {
      this.showBanner("Could not reach the chat service.", () => this.start());
    }
  }

  async send(): Promise<void> {
    const text = this.input.value.trim();
    if (!text || this.sending || !this.sessionId) return;
    this.sending = true;
    this.syncSendState();
    this.input.value = "";

    const bubble = this.addUserBubble(text); // optimistic
    try {
      const reply = await this.api.postMessage(this.sessionId, text);
      this.renderReply(reply);
    } catch (err) {
      bubble.classList.add("unsent");
      const retry = document.createElement("button");
      retry.className = "retry";
      retry.textContent = "retry";
      retry.addEventListener("click", () => {
        bubble.remove();
        this.input.value = text;
        this.sending = false;
        this.send();
      });
      bubble.append(retry);
    } finally {
      this.sending = false;
      this.syncSendState();
    }
  }

  private renderReply(reply: ReplyResponse): void {
    this.addSystemBubble(reply.text, reply.strategy_id, reply.source);
    if (reply.task_complete) {
      this.notice.classList.remove("hidden");
      this.ratingDialog.classList.remove("hidden");
    }
  }

  showRatingDialog(): void {
    this.ratingDialog.classList.remove("hidden");
  }

  async submitRating(score: number): Promise<void> {
    if (!this.sessionId) return;
    const summary = await this.api.closeSession(this.sessionId, score);
    this.ratingDialog.classList.add("hidden");
    this.input.disabled = true;
    this.sendButton.disabled = true;
    const farewell = el("div", "summary");
    farewell.textContent =
      `Thanks! ${summary.conv_len} turns, ${summary.info_gain} unique words, ` +
      `task ${summary.task_success ? "completed" : "not completed"}.`;
    this.messages.append(farewell);
  }

  private addUserBubble(text: string): HTMLElement {
    const bubble = el("div", "bubble user");
    const body = el("span", "text");
    body.textContent = text;
    bubble.append(body);
    this.messages.append(bubble);
    return bubble;
  }

  private addSystemBubble(text: string, strategy: string | null,
                          source: string | null): HTMLElement {
    const bubble = el("div", "bubble system");
    const body = el("span", "text");
    body.textContent = text;
    bubble.append(body);
    if (this.options.debug && strategy) {
      const badge = el("span", "badge");
      badge.textContent = `${strategy} / ${source ?? "?"}`;
      bubble.append(badge);
    }
    this.messages.append(bubble);
    return bubble;
  }

  private showBanner(message: string, onRetry: () => void): void {
    this.banner.textContent = "";
    this.banner.classList.remove("hidden");
    const label = el("span", "banner-text");
    label.textContent = message;
    const retry = document.createElement("button");
    retry.className = "banner-retry";
    retry.textContent = "retry";
    retry.addEventListener("click", onRetry);
    this.banner.append(label, retry);
  }

  private syncSendState(): void {
    this.sendButton.disabled =
      this.sending || !this.sessionId || !this.input.value.trim();
  }
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}
