/** Lattice encoding over a persistent CLI process in streaming mode.
 *
 * The child runs `wordlattice lattice --input - --output -`, which
 * guarantees exactly one response line per request line (an inline
 * error object for texts that normalize to nothing), so requests and
 * responses pair up FIFO. Records are byte-for-byte the CLI's batch
 * output for the same text.
 */

import { spawn, type ChildProcessWithoutNullStreams } from 'node:child_process';
import { constants } from 'node:fs';
import { access } from 'node:fs/promises';
import { createInterface, type Interface } from 'node:readline';

import { cliPrefix, pythonExecutable } from './cli.js';
import { EmptyInputError, type LatticeRecord } from './types.js';

interface Pending {
  resolve: (line: string) => void;
  reject: (err: Error) => void;
}

export class BoundTokenizer {
  private readonly proc: ChildProcessWithoutNullStreams;
  private readonly lines: Interface;
  private readonly pending: Pending[] = [];
  private closed = false;
  private stderrTail = '';

  private constructor(proc: ChildProcessWithoutNullStreams) {
    this.proc = proc;
    this.lines = createInterface({ input: proc.stdout });
    this.lines.on('line', (line) => {
      const waiter = this.pending.shift();
      if (waiter) waiter.resolve(line);
    });
    proc.stderr.on('data', (chunk: Buffer) => {
      this.stderrTail = (this.stderrTail + chunk.toString()).slice(-4096);
    });
    proc.on('close', (code) => {
      this.closed = true;
      const err = new Error(
        `lattice stream closed (exit ${code}): ${this.stderrTail}`.trim(),
      );
      for (const waiter of this.pending.splice(0)) waiter.reject(err);
    });
  }

  /** Spawn a streaming encoder bound to one vocabulary file. */
  static async load(vocabPath: string): Promise<BoundTokenizer> {
    await access(vocabPath, constants.R_OK);
    const proc = spawn(
      pythonExecutable(),
      [...cliPrefix(), 'lattice', '--vocab', vocabPath, '--input', '-', '--output', '-'],
      { stdio: ['pipe', 'pipe', 'pipe'] },
    );
    await new Promise<void>((resolve, reject) => {
      proc.once('spawn', () => resolve());
      proc.once('error', reject);
    });
    return new BoundTokenizer(proc);
  }

  /** The raw serialized record line, exactly as the CLI emits it. */
  encodeRaw(text: string): Promise<string> {
    if (this.closed) {
      return Promise.reject(new Error('tokenizer is closed'));
    }
    if (/[\r\n]/.test(text)) {
      return Promise.reject(
        new Error('text must not contain line breaks; pre-split the input'),
      );
    }
    return new Promise<string>((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.proc.stdin.write(text + '\n');
    });
  }

  /** Field-for-field the CLI's lattice record for the same input. */
  async encode(text: string): Promise<LatticeRecord> {
    const line = await this.encodeRaw(text);
    const parsed = JSON.parse(line) as LatticeRecord | { error: string };
    if ('error' in parsed) {
      if (parsed.error === 'empty_input') throw new EmptyInputError();
      throw new Error(`encode failed: ${parsed.error}`);
    }
    return parsed;
  }

  async close(): Promise<void> {
    if (this.closed) return;
    this.proc.stdin.end();
    await new Promise<void>((resolve) => this.proc.once('close', () => resolve()));
  }
}

/** Load a tokenizer bound to a vocabulary file. */
export function load(vocabPath: string): Promise<BoundTokenizer> {
  return BoundTokenizer.load(vocabPath);
}
