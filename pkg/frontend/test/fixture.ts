/** Shared corpus/vocabulary fixture and a seeded text generator. */

import { mkdtemp, writeFile } from 'node:fs/promises';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { runCli } from '../src/cli.js';

const CJK_START = 0x4e00;

export const ALPHABET: string[] = [
  ...Array.from({ length: 30 }, (_, i) => String.fromCharCode(CJK_START + i)),
  'a',
  'b',
  'x',
  'y',
  '0',
  '1',
  '9',
  '。',
  '！',
];

/** mulberry32: tiny deterministic PRNG for reproducible inputs. */
export function makeRng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randomText(rng: () => number, maxLen = 40): string {
  const n = 1 + Math.floor(rng() * maxLen);
  let out = '';
  for (let i = 0; i < n; i++) {
    out += ALPHABET[Math.floor(rng() * ALPHABET.length)];
  }
  // never emit a line that normalizes to nothing
  return out.trim().length > 0 ? out : '研';
}

export interface Fixture {
  dir: string;
  corpusDir: string;
  vocabPath: string;
}

export async function buildFixture(): Promise<Fixture> {
  const dir = await mkdtemp(join(tmpdir(), 'wordlattice-fixture-'));
  const corpusDir = join(dir, 'corpus');
  const rng = makeRng(2024);
  const docs: string[] = [];
  for (let d = 0; d < 4; d++) {
    const lines: string[] = [];
    for (let s = 0; s < 8; s++) {
      lines.push(randomText(rng, 30) + '。');
    }
    docs.push(lines.join('\n'));
  }
  await writeFile(join(dir, 'words.tsv'), makeWordsFile(), 'utf-8');
  const { mkdir } = await import('node:fs/promises');
  await mkdir(corpusDir);
  for (let d = 0; d < docs.length; d++) {
    await writeFile(join(corpusDir, `doc${d}.txt`), docs[d]! + '\n', 'utf-8');
  }
  const vocabPath = join(dir, 'vocab.tsv');
  await runCli([
    'build-vocab',
    '--input',
    corpusDir,
    '--output',
    vocabPath,
    '--words',
    join(dir, 'words.tsv'),
    '--max-words',
    '40',
  ]);
  return { dir, corpusDir, vocabPath };
}

function makeWordsFile(): string {
  const lines: string[] = [];
  for (let i = 0; i < 14; i++) {
    const a = String.fromCharCode(CJK_START + i);
    const b = String.fromCharCode(CJK_START + ((i + 1) % 30));
    lines.push(`${a}${b}\t${3 + (i % 5)}`);
  }
  // a three-character word and a couple of latin pieces
  lines.push(
    `${String.fromCharCode(CJK_START)}${String.fromCharCode(CJK_START + 1)}${String.fromCharCode(CJK_START + 2)}\t9`,
  );
  lines.push('ab\t4');
  lines.push('xy\t4');
  return lines.join('\n') + '\n';
}
