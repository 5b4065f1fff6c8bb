/** Incremental segmentation of the semi-stream text into reasoning and command.
 *
 * Mirrors the service's sentinel framing. Chunks may split a sentinel
 * anywhere; text is released only once it cannot be a sentinel prefix, so
 * the concatenated deltas match a whole-string parse for any chunking.
 * The command region is buffered verbatim: the inspector needs its exact
 * characters, never a re-serialization.
 */

export interface Sentinels {
  reasoningOpen: string;
  reasoningClose: string;
  commandOpen: string;
  commandClose: string;
}

export const DEFAULT_SENTINELS: Sentinels = {
  reasoningOpen: "<REASONING>",
  reasoningClose: "</REASONING>",
  commandOpen: "<COMMAND>",
  commandClose: "</COMMAND>",
};

export type SemiStreamEvent =
  | { kind: "delta"; text: string }
  | { kind: "reasoning_done" }
  | { kind: "command"; payload: string }
  | { kind: "error"; message: string };

type State = "await_reasoning" | "in_reasoning" | "await_command" | "in_command" | "done";

function pendingPrefixLength(buffer: string, sentinel: string): number {
  const limit = Math.min(buffer.length, sentinel.length - 1);
  for (let len = limit; len > 0; len -= 1) {
    if (buffer.endsWith(sentinel.slice(0, len))) return len;
  }
  return 0;
}

export class SemiStreamParser {
  private buffer = "";
  private state: State = "await_reasoning";
  private emittedCommand = false;

  constructor(private readonly sentinels: Sentinels = DEFAULT_SENTINELS) {}

  feed(chunk: string): SemiStreamEvent[] {
    this.buffer += chunk;
    const events: SemiStreamEvent[] = [];
    let progress = true;
    while (progress) {
      progress = false;
      switch (this.state) {
        case "await_reasoning": {
          const open = this.buffer.indexOf(this.sentinels.reasoningOpen);
          if (open >= 0) {
            this.buffer = this.buffer.slice(open + this.sentinels.reasoningOpen.length);
            this.state = "in_reasoning";
            progress = true;
          } else {
            const hold = pendingPrefixLength(this.buffer, this.sentinels.reasoningOpen);
            this.buffer = this.buffer.slice(this.buffer.length - hold);
          }
          break;
        }
        case "in_reasoning": {
          const close = this.buffer.indexOf(this.sentinels.reasoningClose);
          if (close >= 0) {
            if (close > 0) events.push({ kind: "delta", text: this.buffer.slice(0, close) });
            this.buffer = this.buffer.slice(close + this.sentinels.reasoningClose.length);
            events.push({ kind: "reasoning_done" });
            this.state = "await_command";
            progress = true;
          } else {
            const hold = pendingPrefixLength(this.buffer, this.sentinels.reasoningClose);
            const safe = this.buffer.length - hold;
            if (safe > 0) {
              events.push({ kind: "delta", text: this.buffer.slice(0, safe) });
              this.buffer = this.buffer.slice(safe);
            }
          }
          break;
        }
        case "await_command": {
          const open = this.buffer.indexOf(this.sentinels.commandOpen);
          if (open >= 0) {
            this.buffer = this.buffer.slice(open + this.sentinels.commandOpen.length);
            this.state = "in_command";
            progress = true;
          } else {
            const hold = pendingPrefixLength(this.buffer, this.sentinels.commandOpen);
            this.buffer = this.buffer.slice(this.buffer.length - hold);
          }
          break;
        }
        case "in_command": {
          const close = this.buffer.indexOf(this.sentinels.commandClose);
          if (close >= 0) {
            const payload = this.buffer.slice(0, close);
            this.buffer = this.buffer.slice(close + this.sentinels.commandClose.length);
            this.state = "done";
            this.emittedCommand = true;
            events.push({ kind: "command", payload });
            progress = true;
          }
          break;
        }
        case "done":
          this.buffer = "";
          break;
      }
    }
    return events;
  }

  finish(): SemiStreamEvent[] {
    const events: SemiStreamEvent[] = [];
    if (this.state === "in_reasoning") {
      if (this.buffer) events.push({ kind: "delta", text: this.buffer });
      events.push({ kind: "error", message: "stream ended inside the reasoning region" });
    } else if (this.state === "in_command") {
      events.push({ kind: "error", message: "stream ended inside the command region" });
    } else if (!this.emittedCommand) {
      events.push({ kind: "error", message: "stream carried no command region" });
    }
    this.buffer = "";
    return events;
  }
}
