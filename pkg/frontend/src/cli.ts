/** Location and invocation of the Python CLI. */

import { execFile } from 'node:child_process';
import { promisify } from 'node:util';

import { CliError } from './types.js';

const execFileAsync = promisify(execFile);

/** Python interpreter used to run the toolkit; override with WORDLATTICE_PYTHON. */
export function pythonExecutable(): string {
  return process.env.WORDLATTICE_PYTHON ?? 'python3';
}

/** argv prefix that invokes the CLI module. */
export function cliPrefix(): string[] {
  return ['-m', 'wordlattice.cli'];
}

export async function runCli(
  args: string[],
  options: { timeoutMs?: number } = {},
): Promise<{ stdout: string; stderr: string }> {
  try {
    return await execFileAsync(pythonExecutable(), [...cliPrefix(), ...args], {
      timeout: options.timeoutMs ?? 300_000,
      maxBuffer: 256 * 1024 * 1024,
    });
  } catch (err) {
    const e = err as { code?: number | string; stderr?: string; message?: string };
    const code = typeof e.code === 'number' ? e.code : -1;
    throw new CliError(
      `wordlattice ${args[0] ?? ''} failed (exit ${code}): ${e.stderr ?? e.message ?? ''}`.trim(),
      code,
      e.stderr ?? '',
    );
  }
}
