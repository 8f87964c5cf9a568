/** Wire types for the newline-delimited JSON scoring protocol.
 *
 * Requests carry a client-chosen integer id; responses echo it:
 *
 *     {"id": 7, "type": "complexity", "text": "...", "span": [start, len]}
 *     {"id": 8, "type": "similarity", "pair": ["...", "..."]}
 *     {"id": 8, "score": 0.97}
 *     {"id": 9, "error": "span [5, 2] out of bounds for 3 tokens"}
 *
 * Anything that fails to parse here still gets an error reply (with the
 * request's id when one can be recovered, null otherwise) so the client
 * is never left waiting on a request the server has silently dropped.
 */

import { z } from "zod";

const complexityRequest = z.object({
  id: z.number().int(),
  type: z.literal("complexity"),
  text: z.string(),
  span: z.tuple([z.number().int(), z.number().int()]),
});

const similarityRequest = z.object({
  id: z.number().int(),
  type: z.literal("similarity"),
  pair: z.tuple([z.string(), z.string()]),
});

export const scoreRequest = z.discriminatedUnion("type", [
  complexityRequest,
  similarityRequest,
]);

export type ScoreRequest = z.infer<typeof scoreRequest>;

export type ScoreReply =
  | { id: number | null; score: number }
  | { id: number | null; error: string };

export type ParseOutcome =
  | { ok: true; request: ScoreRequest }
  | { ok: false; id: number | null; error: string };

function recoverId(raw: unknown): number | null {
  if (typeof raw !== "object" || raw === null) return null;
  const id = (raw as Record<string, unknown>).id;
  return typeof id === "number" && Number.isInteger(id) ? id : null;
}

function describe(error: z.ZodError): string {
  const issue = error.issues[0];
  if (!issue) return "invalid request";
  const where = issue.path.length > 0 ? `${issue.path.join(".")}: ` : "";
  return `invalid request: ${where}${issue.message}`;
}

export function parseRequestLine(line: string): ParseOutcome {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch {
    return { ok: false, id: null, error: "request line is not valid JSON" };
  }
  const checked = scoreRequest.safeParse(raw);
  if (!checked.success) {
    return { ok: false, id: recoverId(raw), error: describe(checked.error) };
  }
  return { ok: true, request: checked.data };
}
