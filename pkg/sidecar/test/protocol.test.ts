import { describe, expect, it } from "vitest";

import { parseRequestLine } from "../src/protocol";

describe("parseRequestLine", () => {
  it("accepts a complexity request", () => {
    const outcome = parseRequestLine(
      '{"id": 3, "type": "complexity", "text": "a b c", "span": [1, 2]}'
    );
    expect(outcome).toEqual({
      ok: true,
      request: { id: 3, type: "complexity", text: "a b c", span: [1, 2] },
    });
  });

  it("accepts a similarity request", () => {
    const outcome = parseRequestLine('{"id": 0, "type": "similarity", "pair": ["x", "y"]}');
    expect(outcome).toEqual({
      ok: true,
      request: { id: 0, type: "similarity", pair: ["x", "y"] },
    });
  });

  it("tolerates extra fields", () => {
    const outcome = parseRequestLine(
      '{"id": 1, "type": "similarity", "pair": ["x", "y"], "trace": "abc"}'
    );
    expect(outcome.ok).toBe(true);
  });

  it("rejects non-JSON with a null id", () => {
    const outcome = parseRequestLine("%% noise %%");
    expect(outcome).toEqual({ ok: false, id: null, error: "request line is not valid JSON" });
  });

  it.each([
    ["[1, 2, 3]", null],
    ['"just a string"', null],
    ["42", null],
    ["null", null],
  ])("rejects non-object JSON %s", (line, id) => {
    const outcome = parseRequestLine(line);
    expect(outcome.ok).toBe(false);
    if (!outcome.ok) expect(outcome.id).toBe(id);
  });

  it("recovers the id from otherwise-broken requests", () => {
    const cases = [
      '{"id": 9, "type": "mystery"}',
      '{"id": 9, "type": "complexity", "text": "a b"}',
      '{"id": 9, "type": "complexity", "text": "a b", "span": [0]}',
      '{"id": 9, "type": "complexity", "text": "a b", "span": [0, 1, 2]}',
      '{"id": 9, "type": "complexity", "text": "a b", "span": ["0", "1"]}',
      '{"id": 9, "type": "similarity", "pair": ["only one"]}',
      '{"id": 9, "type": "similarity", "pair": "not a pair"}',
      '{"id": 9, "type": "complexity", "text": 7, "span": [0, 1]}',
    ];
    for (const line of cases) {
      const outcome = parseRequestLine(line);
      expect(outcome.ok).toBe(false);
      if (!outcome.ok) {
        expect(outcome.id).toBe(9);
        expect(outcome.error).toContain("invalid request");
      }
    }
  });

  it("nulls out unusable ids", () => {
    for (const line of ['{"type": "similarity", "pair": ["a", "b"]}',
                        '{"id": "seven", "type": "similarity", "pair": ["a", "b"]}',
                        '{"id": 1.5, "type": "similarity", "pair": ["a", "b"]}']) {
      const outcome = parseRequestLine(line);
      expect(outcome.ok).toBe(false);
      if (!outcome.ok) expect(outcome.id).toBeNull();
    }
  });

  it("requires integer ids on valid bodies too", () => {
    const outcome = parseRequestLine('{"id": 1.5, "type": "complexity", "text": "a", "span": [0, 1]}');
    expect(outcome.ok).toBe(false);
  });
});
