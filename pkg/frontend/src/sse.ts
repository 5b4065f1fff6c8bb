/** Minimal server-sent-events frame reader over a byte stream. */

export interface SseFrame {
  event: string;
  data: string;
}

/**
 * Split an SSE body into frames. Frames are separated by a blank line;
 * we only need single-line `event:` / `data:` fields.
 */
export class SseFrameParser {
  private buffer = "";

  push(text: string): SseFrame[] {
    this.buffer += text;
    const frames: SseFrame[] = [];
    let boundary = this.buffer.indexOf("\n\n");
    while (boundary >= 0) {
      const raw = this.buffer.slice(0, boundary);
      this.buffer = this.buffer.slice(boundary + 2);
      const frame: SseFrame = { event: "message", data: "" };
      const dataLines: string[] = [];
      for (const line of raw.split("\n")) {
        if (line.startsWith("event: ")) {
          frame.event = line.slice("event: ".length);
        } else if (line.startsWith("data: ")) {
          dataLines.push(line.slice("data: ".length));
        }
      }
      frame.data = dataLines.join("\n");
      if (frame.event !== "message" || frame.data) {
        frames.push(frame);
      }
      boundary = this.buffer.indexOf("\n\n");
    }
    return frames;
  }
}

export async function readSseStream(
  body: ReadableStream<Uint8Array>,
  onFrame: (frame: SseFrame) => void,
): Promise<void> {
  const reader = body.getReader();
  const decoder = new TextDecoder("utf-8");
  const parser = new SseFrameParser();
  for (;;) {
    const { done, value } = await reader.read();
    if (done) break;
    for (const frame of parser.push(decoder.decode(value, { stream: true }))) {
      onFrame(frame);
    }
  }
  for (const frame of parser.push(decoder.decode())) {
    onFrame(frame);
  }
}
