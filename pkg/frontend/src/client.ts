/**
 * Client for the neurosym scoring service speaking its line-delimited
 * JSON protocol: one request line in, one response line out, in order.
 *
 * By default the client launches the service as a child process and
 * talks to it over stdio; a local TCP transport is also available. One
 * client instance is meant for one training process and must not be
 * used for concurrent overlapping calls.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { createInterface, type Interface } from "node:readline";
import { Socket } from "node:net";
import type { Readable, Writable } from "node:stream";

export type Transport =
  | { kind: "stdio"; command?: string[] }
  | { kind: "tcp"; host: string; port: number };

export interface ClientConfig {
  transport?: Transport;
  requestTimeoutMs?: number;
  rewardConfigPath?: string;
}

export interface ScoreResult {
  reward: number;
  classification: string;
  correct: boolean;
  answerValue: string | null;
  errorMessage: string | null;
}

export type AnswerType = "option" | "exact" | "approx" | "text";

/** Raised when the service connection fails or dies mid-request. */
export class TransportError extends Error {}

/** Raised when the service answers with something the protocol forbids. */
export class ProtocolError extends Error {}

/** Raised when a request exceeds the configured timeout. */
export class TimeoutError extends Error {}

interface Connection {
  write(line: string): void;
  close(): void;
  reader: Interface;
}

const DEFAULT_COMMAND = ["neurosym", "serve"];
const DEFAULT_TIMEOUT_MS = 30_000;

export class NeurosymClient {
  private readonly transport: Transport;
  private readonly requestTimeoutMs: number;
  private readonly rewardConfigPath?: string;
  private connection: Connection | null = null;
  private pending: Array<{
    resolve: (line: string) => void;
    reject: (err: Error) => void;
  }> = [];

  constructor(config: ClientConfig = {}) {
    this.transport = config.transport ?? { kind: "stdio" };
    this.requestTimeoutMs = config.requestTimeoutMs ?? DEFAULT_TIMEOUT_MS;
    if (this.requestTimeoutMs <= 0) {
      throw new Error("requestTimeoutMs must be positive");
    }
    this.rewardConfigPath = config.rewardConfigPath;
  }

  /** Score one group of completions against a shared ground truth.
   * Results come back in completion order. Retries once, idempotently,
   * if the transport fails mid-call. */
  async scoreGroup(
    completions: readonly string[],
    answerType: AnswerType,
    answer: string,
    relTol?: number,
  ): Promise<ScoreResult[]> {
    if (completions.length === 0) {
      return [];
    }
    return this.withRetry(async () => {
      const lines = completions.map((completion, i) =>
        JSON.stringify({
          id: `g${i}`,
          completion,
          answer_type: answerType,
          answer,
          ...(relTol !== undefined ? { rel_tol: relTol } : {}),
        }),
      );
      const replies = await this.exchange(lines);
      return replies.map((raw, i) => {
        const obj = JSON.parse(raw);
        if (typeof obj.error === "string") {
          throw new ProtocolError(`service rejected request ${i}: ${obj.error}`);
        }
        if (obj.id !== `g${i}`) {
          throw new ProtocolError(
            `response out of order: expected id g${i}, got ${obj.id}`,
          );
        }
        return {
          reward: obj.reward,
          classification: obj.classification,
          correct: obj.correct,
          answerValue: obj.answer_value ?? null,
          errorMessage: obj.error_message ?? null,
        };
      });
    });
  }

  /** Health check; resolves to the service version string. */
  async ping(): Promise<string> {
    return this.withRetry(async () => {
      const [raw] = await this.exchange([JSON.stringify({ op: "ping" })]);
      const obj = JSON.parse(raw);
      if (obj.op !== "pong" || typeof obj.version !== "string") {
        throw new ProtocolError(`unexpected ping reply: ${raw}`);
      }
      return obj.version;
    });
  }

  /** Drop the current connection; the next call reconnects. */
  disconnect(): void {
    if (this.connection) {
      this.connection.close();
      this.connection = null;
    }
    this.failPending(new TransportError("connection closed"));
  }

  close(): void {
    this.disconnect();
  }

  // ---- internals ----

  private async withRetry<T>(fn: () => Promise<T>): Promise<T> {
    try {
      return await fn();
    } catch (err) {
      if (err instanceof TransportError) {
        this.disconnect();
        return await fn();
      }
      throw err;
    }
  }

  private async exchange(lines: string[]): Promise<string[]> {
    const connection = this.connect();
    const replies = lines.map(
      () =>
        new Promise<string>((resolve, reject) => {
          this.pending.push({ resolve, reject });
        }),
    );
    // Observe rejections immediately so a write failure below cannot
    // surface as an unhandled rejection before the race starts.
    for (const reply of replies) {
      reply.catch(() => {});
    }
    try {
      for (const line of lines) {
        connection.write(line + "\n");
      }
    } catch (err) {
      this.failPending(err instanceof Error ? err : new TransportError(String(err)));
      throw err;
    }
    let timer: NodeJS.Timeout | undefined;
    const timeout = new Promise<never>((_, reject) => {
      timer = setTimeout(() => {
        this.disconnect();
        reject(new TimeoutError(`no response within ${this.requestTimeoutMs} ms`));
      }, this.requestTimeoutMs);
    });
    try {
      return await Promise.race([Promise.all(replies), timeout]);
    } finally {
      clearTimeout(timer);
    }
  }

  private connect(): Connection {
    if (this.connection) {
      return this.connection;
    }
    const connection =
      this.transport.kind === "stdio"
        ? this.spawnStdio(this.transport)
        : this.connectTcp(this.transport);
    connection.reader.on("line", (line) => {
      const waiter = this.pending.shift();
      if (waiter) {
        waiter.resolve(line);
      }
    });
    this.connection = connection;
    return connection;
  }

  private spawnStdio(transport: { kind: "stdio"; command?: string[] }): Connection {
    const command = transport.command ?? [...DEFAULT_COMMAND];
    const argv = [...command];
    if (this.rewardConfigPath) {
      argv.push("--reward-config", this.rewardConfigPath);
    }
    const child: ChildProcess = spawn(argv[0], argv.slice(1), {
      stdio: ["pipe", "pipe", "inherit"],
    });
    const stdin = child.stdin as Writable;
    const stdout = child.stdout as Readable;
    child.on("error", (err) => this.dropConnection(`service failed to start: ${err.message}`));
    child.on("exit", (code) => this.dropConnection(`service exited with code ${code}`));
    stdin.on("error", (err) => this.dropConnection(`write failed: ${err.message}`));
    return {
      write: (line) => {
        if (child.exitCode !== null || !stdin.writable) {
          throw new TransportError("service process is not running");
        }
        stdin.write(line);
      },
      close: () => {
        child.removeAllListeners("exit");
        child.kill();
      },
      reader: createInterface({ input: stdout }),
    };
  }

  private connectTcp(transport: { kind: "tcp"; host: string; port: number }): Connection {
    const socket = new Socket();
    socket.connect(transport.port, transport.host);
    socket.on("error", (err) => this.dropConnection(`socket error: ${err.message}`));
    socket.on("close", () => this.dropConnection("socket closed"));
    return {
      write: (line) => {
        if (socket.destroyed) {
          throw new TransportError("socket is closed");
        }
        socket.write(line);
      },
      close: () => {
        socket.removeAllListeners("close");
        socket.destroy();
      },
      reader: createInterface({ input: socket }),
    };
  }

  private dropConnection(reason: string): void {
    if (this.connection) {
      this.connection.close();
      this.connection = null;
    }
    this.failPending(new TransportError(reason));
  }

  private failPending(err: Error): void {
    const waiters = this.pending;
    this.pending = [];
    for (const waiter of waiters) {
      waiter.reject(err);
    }
  }
}
