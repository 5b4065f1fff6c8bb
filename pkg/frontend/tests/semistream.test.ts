import { describe, expect, it } from "vitest";

import { SemiStreamParser, SemiStreamEvent } from "../src/semistream.js";

const PLAN = `{"cmd":{"mode":"cool","tips":"stay cool"},"threshold":{"co2_ppm":800}}`;
const STREAM = `<REASONING>getting warm\nco2 fine</REASONING><COMMAND>${PLAN}</COMMAND>`;

interface Summary {
  text: string;
  terminals: string[];
  payload: string | null;
}

function summarize(events: SemiStreamEvent[]): Summary {
  let text = "";
  let payload: string | null = null;
  const terminals: string[] = [];
  for (const event of events) {
    if (event.kind === "delta") text += event.text;
    else if (event.kind === "reasoning_done") terminals.push("done");
    else if (event.kind === "command") {
      terminals.push("command");
      payload = event.payload;
    } else terminals.push(`error:${event.message}`);
  }
  return { text, terminals, payload };
}

function parseChunks(chunks: string[]): Summary {
  const parser = new SemiStreamParser();
  const events: SemiStreamEvent[] = [];
  for (const chunk of chunks) events.push(...parser.feed(chunk));
  events.push(...parser.finish());
  return summarize(events);
}

describe("SemiStreamParser", () => {
  it("parses a whole stream", () => {
    const summary = parseChunks([STREAM]);
    expect(summary.text).toBe("getting warm\nco2 fine");
    expect(summary.terminals).toEqual(["done", "command"]);
    expect(summary.payload).toBe(PLAN);
  });

  it("is invariant under every two-chunk split", () => {
    const reference = parseChunks([STREAM]);
    for (let cut = 0; cut <= STREAM.length; cut += 1) {
      expect(parseChunks([STREAM.slice(0, cut), STREAM.slice(cut)])).toEqual(reference);
    }
  });

  it("is invariant under single-character feeding", () => {
    const reference = parseChunks([STREAM]);
    expect(parseChunks([...STREAM])).toEqual(reference);
  });

  it("is invariant under random partitions", () => {
    const reference = parseChunks([STREAM]);
    let seed = 1337;
    const rand = () => {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };
    for (let round = 0; round < 200; round += 1) {
      const cuts = new Set<number>();
      const n = 1 + Math.floor(rand() * 12);
      for (let i = 0; i < n; i += 1) cuts.add(1 + Math.floor(rand() * (STREAM.length - 1)));
      const sorted = [...cuts].sort((a, b) => a - b);
      const chunks: string[] = [];
      let last = 0;
      for (const cut of sorted) {
        chunks.push(STREAM.slice(last, cut));
        last = cut;
      }
      chunks.push(STREAM.slice(last));
      expect(parseChunks(chunks)).toEqual(reference);
    }
  });

  it("keeps multi-byte text intact across region boundaries", () => {
    const fancy = `<REASONING>温暖 and ✓ fine</REASONING><COMMAND>${PLAN}</COMMAND>`;
    const reference = parseChunks([fancy]);
    expect(reference.text).toBe("温暖 and ✓ fine");
    for (let cut = 0; cut <= fancy.length; cut += 1) {
      expect(parseChunks([fancy.slice(0, cut), fancy.slice(cut)])).toEqual(reference);
    }
  });

  it("flushes held sentinel prefix at finish", () => {
    const parser = new SemiStreamParser();
    const events = [...parser.feed("<REASONING>warm</REAS"), ...parser.finish()];
    const summary = summarize(events);
    expect(summary.text).toBe("warm</REAS");
    expect(summary.terminals.some((t) => t.startsWith("error:"))).toBe(true);
  });

  it("reports a stream with no command region", () => {
    const parser = new SemiStreamParser();
    const events = [
      ...parser.feed("<REASONING>calm</REASONING>"),
      ...parser.finish(),
    ];
    const summary = summarize(events);
    expect(summary.terminals).toContain("error:stream carried no command region");
  });

  it("returns the command payload verbatim, never re-serialized", () => {
    const oddSpacing = `{"cmd": {"mode":"cool"} , "threshold":{"co2_ppm": 800.0}}`;
    const stream = `<REASONING>x</REASONING><COMMAND>${oddSpacing}</COMMAND>`;
    expect(parseChunks([stream]).payload).toBe(oddSpacing);
  });
});
