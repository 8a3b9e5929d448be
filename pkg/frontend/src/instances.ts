/** Pre-training instance generation through the CLI's record files. */

import { cp, mkdtemp, readFile, rm } from 'node:fs/promises';
import { tmpdir } from 'node:os';
import { basename, join } from 'node:path';

import { runCli } from './cli.js';
import type { InstanceConfig, InstanceRecord, InstanceRun } from './types.js';

function configArgs(config: InstanceConfig): string[] {
  const args: string[] = [];
  if (config.phase !== undefined) args.push('--phase', String(config.phase));
  if (config.charBudget !== undefined) args.push('--char-budget', String(config.charBudget));
  if (config.tokenCap !== undefined) args.push('--token-cap', String(config.tokenCap));
  if (config.maskRatio !== undefined) args.push('--mask-ratio', String(config.maskRatio));
  if (config.seed !== undefined) args.push('--seed', String(config.seed));
  if (config.shards !== undefined) args.push('--shards', String(config.shards));
  if (config.masking !== undefined) args.push('--masking', config.masking);
  if (config.recordFormat !== undefined) args.push('--record-format', config.recordFormat);
  return args;
}

function shardPaths(output: string, shards: number): string[] {
  if (shards <= 1) return [output];
  const dot = output.lastIndexOf('.');
  const root = dot < 0 ? output : output.slice(0, dot);
  const ext = dot < 0 ? '' : output.slice(dot);
  return Array.from({ length: shards }, (_, i) => `${root}.shard${String(i).padStart(3, '0')}${ext}`);
}

function parseJsonl(content: string): InstanceRecord[] {
  const lines = content.split('\n').filter((x) => x.length > 0);
  const header = JSON.parse(lines[0] ?? '{}') as { schema_version?: number };
  if (header.schema_version !== 1) {
    throw new Error(`unsupported instance schema: ${lines[0]}`);
  }
  return lines.slice(1).map((x) => JSON.parse(x) as InstanceRecord);
}

function parseBinary(buf: Buffer): InstanceRecord[] {
  if (buf.length === 0 || buf[0] !== 1) {
    throw new Error('unsupported binary instance schema');
  }
  const records: InstanceRecord[] = [];
  let off = 1;
  while (off < buf.length) {
    const len = buf.readUInt32LE(off);
    off += 4;
    records.push(JSON.parse(buf.subarray(off, off + len).toString('utf-8')) as InstanceRecord);
    off += len;
  }
  return records;
}

/** Run instance generation over one or more corpus paths.
 *
 * Semantics and determinism match `wordlattice make-instances` exactly:
 * the same (inputs, config, seed) produce byte-identical record files.
 * When several input paths are given they are staged into a temporary
 * directory in argument order.
 */
export async function makeInstances(
  input: string | string[],
  vocabPath: string,
  config: InstanceConfig = {},
  outputPath?: string,
): Promise<InstanceRun> {
  const scratch = await mkdtemp(join(tmpdir(), 'wordlattice-'));
  try {
    let inputPath: string;
    if (Array.isArray(input)) {
      inputPath = join(scratch, 'corpus');
      for (let i = 0; i < input.length; i++) {
        const src = input[i]!;
        await cp(src, join(inputPath, `${String(i).padStart(4, '0')}_${basename(src)}`), {
          recursive: true,
        });
      }
    } else {
      inputPath = input;
    }
    const output = outputPath ?? join(scratch, 'instances.jsonl');
    await runCli([
      'make-instances',
      '--vocab',
      vocabPath,
      '--input',
      inputPath,
      '--output',
      output,
      ...configArgs(config),
    ]);
    const manifest = JSON.parse(
      await readFile(output + '.manifest.json', 'utf-8'),
    ) as Record<string, unknown>;
    const outputPaths = shardPaths(output, config.shards ?? 1);
    const records: InstanceRecord[] = [];
    for (const path of outputPaths) {
      const buf = await readFile(path);
      records.push(
        ...(config.recordFormat === 'binary'
          ? parseBinary(buf)
          : parseJsonl(buf.toString('utf-8'))),
      );
    }
    return { outputPaths, records, manifest };
  } finally {
    if (outputPath) {
      await rm(scratch, { recursive: true, force: true });
    }
    // without an explicit outputPath the record files live in `scratch`
    // and stay readable until the host process cleans its tmpdir
  }
}
