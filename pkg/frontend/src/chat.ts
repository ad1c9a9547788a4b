import { ApiError, ask } from "./api";
import type { AskResponse, ChatTurn } from "./types";

export interface ChatPanelOptions {
  askFn?: (question: string, topK?: number) => Promise<AskResponse>;
  onCitationClick?: (packageName: string) => void;
}

const NETWORK_ERROR = "network failure";

/**
 * Transcript + question form. One /ask in flight at a time: the send
 * button stays disabled while a turn is pending. Failed turns keep the
 * question; network failures additionally offer a retry button.
 */
export class ChatPanel {
  readonly turns: ChatTurn[] = [];
  private readonly askFn: (question: string, topK?: number) => Promise<AskResponse>;
  private readonly onCitationClick: (packageName: string) => void;
  private readonly transcript: HTMLDivElement;
  private readonly input: HTMLTextAreaElement;
  private readonly send: HTMLButtonElement;
  private readonly retriable = new WeakSet<ChatTurn>();

  constructor(root: HTMLElement, options: ChatPanelOptions = {}) {
    this.askFn = options.askFn ?? ask;
    this.onCitationClick = options.onCitationClick ?? (() => {});
    root.innerHTML = `
      <div class="transcript" data-role="transcript"></div>
      <form class="ask-form" data-role="ask-form">
        <textarea data-role="question" rows="2"
          placeholder="Ask about a malicious package…"></textarea>
        <button type="submit" data-role="send" disabled>Ask</button>
      </form>
    `;
    this.transcript = root.querySelector('[data-role="transcript"]')!;
    this.input = root.querySelector('[data-role="question"]')!;
    this.send = root.querySelector('[data-role="send"]')!;
    this.input.addEventListener("input", () => this.syncSendState());
    root.querySelector('[data-role="ask-form"]')!.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submit(this.input.value);
    });
  }

  get pending(): boolean {
    return this.turns.some((turn) => turn.pending);
  }

  private syncSendState(): void {
    this.send.disabled = this.pending || this.input.value.trim() === "";
  }

  async submit(text: string): Promise<void> {
    const question = text.trim();
    if (question === "" || this.pending) return;
    const turn: ChatTurn = { question, answer: "", citations: [], pending: true };
    this.turns.push(turn);
    this.input.value = "";
    this.renderTranscript();
    this.syncSendState();
    try {
      const response = await this.askFn(question);
      turn.answer = response.answer;
      turn.citations = response.citations;
      turn.pending = false;
    } catch (error) {
      turn.pending = false;
      if (error instanceof ApiError) {
        turn.error = error.kind;
      } else {
        turn.error = NETWORK_ERROR;
        this.retriable.add(turn);
      }
    }
    this.renderTranscript();
    this.syncSendState();
  }

  private retry(turn: ChatTurn): void {
    const position = this.turns.indexOf(turn);
    if (position >= 0) this.turns.splice(position, 1);
    void this.submit(turn.question);
  }

  private renderTranscript(): void {
    this.transcript.replaceChildren(
      ...this.turns.map((turn) => this.renderTurn(turn)),
    );
    this.transcript.scrollTop = this.transcript.scrollHeight;
  }

  private renderTurn(turn: ChatTurn): HTMLElement {
    const element = document.createElement("div");
    element.className = "turn";
    const question = document.createElement("div");
    question.className = "question";
    question.dataset.role = "turn-question";
    question.textContent = turn.question;
    element.append(question);

    if (turn.pending) {
      const pendingNote = document.createElement("div");
      pendingNote.className = "pending";
      pendingNote.dataset.role = "pending";
      pendingNote.textContent = "thinking…";
      element.append(pendingNote);
      return element;
    }
    if (turn.error !== undefined) {
      const errorNote = document.createElement("div");
      errorNote.className = "error";
      errorNote.dataset.role = "turn-error";
      errorNote.textContent = turn.error;
      element.append(errorNote);
      if (this.retriable.has(turn)) {
        const retry = document.createElement("button");
        retry.type = "button";
        retry.dataset.role = "retry";
        retry.textContent = "retry";
        retry.addEventListener("click", () => this.retry(turn));
        element.append(retry);
      }
      return element;
    }
    const answer = document.createElement("div");
    answer.className = "answer";
    answer.dataset.role = "turn-answer";
    answer.textContent = turn.answer;
    element.append(answer);
    const citations = document.createElement("div");
    citations.className = "citations";
    for (const citation of turn.citations) {
      const chip = document.createElement("button");
      chip.type = "button";
      chip.className = "citation";
      chip.dataset.role = "citation";
      chip.dataset.package = citation.package_name;
      chip.textContent =
        `${citation.package_name} ${citation.version} (${citation.score.toFixed(3)})`;
      chip.addEventListener("click", () => this.onCitationClick(citation.package_name));
      citations.append(chip);
    }
    element.append(citations);
    return element;
  }
}
