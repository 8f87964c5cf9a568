/** Request loop: one line in, one reply out, batched through the models.
 *
 * Valid requests queue up and are scored a batch at a time; the batch
 * flushes when it reaches the configured size or when the transport runs
 * out of buffered input. Replies are written in batch order, which the
 * protocol allows: the id is the only ordering contract. Requests that
 * fail to parse or that a model rejects get an error reply immediately
 * and never terminate the loop.
 */

import { createInterface } from "node:readline";

import { ScoreReply, parseRequestLine } from "./protocol";
import { ComplexityModel } from "./complexity";
import { SimilarityModel } from "./similarity";
import { clamp01 } from "./text";

export interface ScorerModels {
  complexity: ComplexityModel;
  similarity: SimilarityModel;
}

type PendingRequest = Extract<ReturnType<typeof parseRequestLine>, { ok: true }>["request"];

export class ScoringSession {
  private queue: PendingRequest[] = [];

  constructor(
    private readonly models: ScorerModels,
    private readonly emit: (reply: ScoreReply) => void,
    private readonly batchSize: number
  ) {}

  handleLine(line: string): void {
    if (line.trim().length === 0) return;
    const outcome = parseRequestLine(line);
    if (!outcome.ok) {
      this.emit({ id: outcome.id, error: outcome.error });
      return;
    }
    this.queue.push(outcome.request);
    if (this.queue.length >= this.batchSize) this.flush();
  }

  flush(): void {
    if (this.queue.length === 0) return;
    const batch = this.queue.splice(0);
    for (const request of batch) {
      this.emit(this.score(request));
    }
  }

  private score(request: PendingRequest): ScoreReply {
    let raw: number;
    try {
      raw =
        request.type === "complexity"
          ? this.models.complexity(request.text, request.span)
          : this.models.similarity(request.pair[0], request.pair[1]);
    } catch (err) {
      return { id: request.id, error: err instanceof Error ? err.message : String(err) };
    }
    if (!Number.isFinite(raw)) {
      return { id: request.id, error: "model returned a non-finite score" };
    }
    return { id: request.id, score: clamp01(raw) };
  }
}

interface ReplySink {
  write(chunk: string): boolean;
  once(event: "drain", listener: () => void): unknown;
}

/** Serve one line stream until it ends. Writing applies backpressure:
 * when the sink's buffer fills, reading pauses until it drains. */
export function serveStream(
  input: NodeJS.ReadableStream,
  output: ReplySink,
  models: ScorerModels,
  batchSize: number
): Promise<void> {
  const reader = createInterface({ input, terminal: false });
  const session = new ScoringSession(
    models,
    (reply) => {
      if (!output.write(JSON.stringify(reply) + "\n")) {
        reader.pause();
        output.once("drain", () => reader.resume());
      }
    },
    batchSize
  );

  let flushQueued = false;
  reader.on("line", (line) => {
    session.handleLine(line);
    if (!flushQueued) {
      flushQueued = true;
      // flush a partial batch once the current burst of input is consumed
      setImmediate(() => {
        flushQueued = false;
        session.flush();
      });
    }
  });

  return new Promise((resolve) => {
    reader.on("close", () => {
      session.flush();
      resolve();
    });
  });
}
