import { mkdtemp, readFile, rm } from 'node:fs/promises';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { runCli } from '../src/cli.js';
import { makeInstances } from '../src/instances.js';
import { CliError, type InstanceConfig } from '../src/types.js';
import { buildFixture, type Fixture } from './fixture.js';

let fx: Fixture;
let scratch: string;

beforeAll(async () => {
  fx = await buildFixture();
  scratch = await mkdtemp(join(tmpdir(), 'wordlattice-inst-'));
});

afterAll(async () => {
  await rm(fx.dir, { recursive: true, force: true });
  await rm(scratch, { recursive: true, force: true });
});

const PRESET_CONFIGS: Array<[string, InstanceConfig, string[]]> = [
  ['phase-1 msp', { phase: 1, seed: 7 }, ['--phase', '1', '--seed', '7']],
  ['phase-2 msp', { phase: 2, seed: 11 }, ['--phase', '2', '--seed', '11']],
  [
    'custom random-masking',
    { charBudget: 64, tokenCap: 120, maskRatio: 0.15, seed: 3, masking: 'random' },
    ['--char-budget', '64', '--token-cap', '120', '--mask-ratio', '0.15', '--seed', '3', '--masking', 'random'],
  ],
];

describe('makeInstances differential equivalence', () => {
  for (const [name, config, cliArgs] of PRESET_CONFIGS) {
    it(`matches a direct CLI run byte for byte (${name})`, async () => {
      const viaBinding = join(scratch, `${name.replaceAll(' ', '_')}.binding.jsonl`);
      const viaCli = join(scratch, `${name.replaceAll(' ', '_')}.cli.jsonl`);
      const run = await makeInstances(fx.corpusDir, fx.vocabPath, config, viaBinding);
      await runCli([
        'make-instances',
        '--vocab',
        fx.vocabPath,
        '--input',
        fx.corpusDir,
        '--output',
        viaCli,
        ...cliArgs,
      ]);
      const a = await readFile(viaBinding);
      const b = await readFile(viaCli);
      expect(a.equals(b)).toBe(true);
      const ma = await readFile(viaBinding + '.manifest.json');
      const mb = await readFile(viaCli + '.manifest.json');
      expect(ma.equals(mb)).toBe(true);
      expect(run.records.length).toBeGreaterThan(0);
      expect(run.manifest['records']).toBe(run.records.length);
    });
  }

  it('is deterministic across repeated runs with one seed', async () => {
    const cfg: InstanceConfig = { phase: 1, seed: 5 };
    const out1 = join(scratch, 'rep1.jsonl');
    const out2 = join(scratch, 'rep2.jsonl');
    await makeInstances(fx.corpusDir, fx.vocabPath, cfg, out1);
    await makeInstances(fx.corpusDir, fx.vocabPath, cfg, out2);
    expect((await readFile(out1)).equals(await readFile(out2))).toBe(true);
  });

  it('honours shard splits with a deterministic merge order', async () => {
    const single = await makeInstances(fx.corpusDir, fx.vocabPath, { phase: 1, seed: 9 },
      join(scratch, 'single.jsonl'));
    const sharded = await makeInstances(fx.corpusDir, fx.vocabPath, { phase: 1, seed: 9, shards: 2 },
      join(scratch, 'sharded.jsonl'));
    expect(sharded.outputPaths).toHaveLength(2);
    expect(sharded.records).toEqual(single.records);
  });

  it('parses binary record files', async () => {
    const run = await makeInstances(
      fx.corpusDir,
      fx.vocabPath,
      { phase: 1, seed: 7, recordFormat: 'binary' },
      join(scratch, 'records.bin'),
    );
    expect(run.records.length).toBeGreaterThan(0);
    const jsonl = await makeInstances(fx.corpusDir, fx.vocabPath, { phase: 1, seed: 7 },
      join(scratch, 'records.jsonl'));
    expect(run.records).toEqual(jsonl.records);
  });

  it('accepts multiple input paths in order', async () => {
    const run = await makeInstances(
      [join(fx.corpusDir, 'doc0.txt'), join(fx.corpusDir, 'doc1.txt')],
      fx.vocabPath,
      { phase: 1, seed: 7 },
      join(scratch, 'multi.jsonl'),
    );
    expect(run.records.length).toBeGreaterThan(0);
  });

  it('maps config validation to a host error with exit code 3', async () => {
    await expect(
      makeInstances(fx.corpusDir, fx.vocabPath, { maskRatio: 1.5 }, join(scratch, 'bad.jsonl')),
    ).rejects.toMatchObject({ name: 'CliError', exitCode: 3 });
  });

  it('maps a missing corpus to exit code 2', async () => {
    try {
      await makeInstances(join(fx.dir, 'nope'), fx.vocabPath, { phase: 1 }, join(scratch, 'x.jsonl'));
      expect.unreachable('should have thrown');
    } catch (err) {
      expect(err).toBeInstanceOf(CliError);
      expect((err as CliError).exitCode).toBe(2);
    }
  });

  it('every instance respects the phase-1 token cap', async () => {
    const run = await makeInstances(fx.corpusDir, fx.vocabPath, { phase: 1, seed: 7 },
      join(scratch, 'caps.jsonl'));
    for (const rec of run.records) {
      expect(rec.token_ids.length).toBeLessThanOrEqual(173);
      expect(rec.token_ids[0]).toBe(0); // CLS
      expect(rec.s.length).toBe(rec.token_ids.length);
    }
  });
});
