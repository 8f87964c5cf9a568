#!/usr/bin/env node
/**
 * Scoring server for the corpus-preparation pipeline.
 *
 * Speaks the newline-delimited JSON scoring protocol over stdio
 * (default) or TCP; TCP mode prints "LISTENING <port>" on stdout once
 * bound. Models are chosen at startup and hidden behind the protocol;
 * a load failure exits nonzero before any request is read.
 */

import net from "node:net";
import { parseArgs } from "node:util";

import { COMPLEXITY_MODELS, resolveComplexityModel } from "./complexity";
import { SIMILARITY_MODELS, resolveSimilarityModel } from "./similarity";
import { ScorerModels, serveStream } from "./server";

const USAGE = `usage: simplecorpus-scorer [--transport stdio|tcp] [--port N]
                           [--complexity-model PATH-or-name]
                           [--similarity-model PATH-or-name]
                           [--batch-size N]

Built-in complexity models: ${Object.keys(COMPLEXITY_MODELS).join(", ")}.
Built-in similarity models: ${Object.keys(SIMILARITY_MODELS).join(", ")}.
A path loads a JSON model file instead: a word -> score lexicon for
complexity, or {"dim": D, "vectors": {word: [..]}} word vectors for
similarity.`;

const OPTIONS = {
  transport: { type: "string", default: "stdio" },
  port: { type: "string", default: "0" },
  "complexity-model": { type: "string", default: "surface" },
  "similarity-model": { type: "string", default: "char-trigram" },
  "batch-size": { type: "string", default: "32" },
  help: { type: "boolean", short: "h", default: false },
} as const;

function fail(message: string, code: number): never {
  console.error(message);
  process.exit(code);
}

function intFlag(name: string, value: string, minimum: number): number {
  const parsed = Number(value);
  if (!Number.isInteger(parsed) || parsed < minimum) {
    fail(`${name} must be an integer >= ${minimum}, got ${JSON.stringify(value)}`, 2);
  }
  return parsed;
}

function serveStdio(models: ScorerModels, batchSize: number): void {
  // the peer closing our stdout mid-write is a normal shutdown, not a crash
  process.stdout.on("error", (err: NodeJS.ErrnoException) => {
    if (err.code === "EPIPE") process.exit(0);
    throw err;
  });
  void serveStream(process.stdin, process.stdout, models, batchSize).then(() =>
    process.exit(0)
  );
}

function serveTcp(models: ScorerModels, port: number, batchSize: number): void {
  const server = net.createServer((conn) => {
    conn.on("error", (err) => console.error(`connection error: ${err.message}`));
    void serveStream(conn, conn, models, batchSize).then(() => conn.end());
  });
  server.on("error", (err) => fail(`cannot listen on 127.0.0.1:${port}: ${err.message}`, 1));
  server.listen(port, "127.0.0.1", () => {
    const address = server.address() as net.AddressInfo;
    console.log(`LISTENING ${address.port}`);
  });
}

function main(): void {
  let values;
  try {
    values = parseArgs({ options: OPTIONS, allowPositionals: false }).values;
  } catch (err) {
    fail(`${err instanceof Error ? err.message : err}\n\n${USAGE}`, 2);
  }
  if (values.help) {
    console.log(USAGE);
    return;
  }
  const transport = values.transport;
  if (transport !== "stdio" && transport !== "tcp") {
    fail(`--transport must be stdio or tcp, got ${JSON.stringify(transport)}\n\n${USAGE}`, 2);
  }
  const port = intFlag("--port", values.port, 0);
  const batchSize = intFlag("--batch-size", values["batch-size"], 1);

  let models: ScorerModels;
  try {
    models = {
      complexity: resolveComplexityModel(values["complexity-model"]),
      similarity: resolveSimilarityModel(values["similarity-model"]),
    };
  } catch (err) {
    fail(`model load failed: ${err instanceof Error ? err.message : err}`, 1);
  }

  if (transport === "tcp") {
    serveTcp(models, port, batchSize);
  } else {
    serveStdio(models, batchSize);
  }
}

main();
