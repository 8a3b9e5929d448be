/** Record schemas mirrored from the CLI's serialized formats. */

export interface LatticeTokenRecord {
  surface: string;
  /** 1-based start character position (inclusive). */
  s: number;
  /** 1-based end character position (inclusive). */
  e: number;
  gran: 'character' | 'word' | 'word-piece' | 'special';
  id: number;
}

export interface LatticeRecord {
  text: string;
  tokens: LatticeTokenRecord[];
}

export interface InstanceRecord {
  token_ids: number[];
  s: number[];
  e: number[];
  mask_positions: number[];
  msp_targets: Array<[number, number]>;
  sop_label: 0 | 1;
  n_chars: number;
}

export interface InstanceConfig {
  /** Phase preset locking (charBudget, tokenCap): 1 = 128/173, 2 = 512/692. */
  phase?: 1 | 2;
  charBudget?: number;
  tokenCap?: number;
  /** Fraction of maskable tokens to cover with selected segments. */
  maskRatio?: number;
  seed?: number;
  shards?: number;
  masking?: 'msp' | 'random';
  recordFormat?: 'jsonl' | 'binary';
}

export interface InstanceRun {
  /** Per-shard output files, in merge order. */
  outputPaths: string[];
  /** Parsed instance records across all shards, in stream order. */
  records: InstanceRecord[];
  /** The run manifest (config echo, input digests, counts, mask rate). */
  manifest: Record<string, unknown>;
}

/** Raised when the underlying command exits nonzero. */
export class CliError extends Error {
  constructor(
    message: string,
    public readonly exitCode: number,
    public readonly stderr: string,
  ) {
    super(message);
    this.name = 'CliError';
  }
}

/** Raised when a text normalizes to nothing and cannot be encoded. */
export class EmptyInputError extends Error {
  constructor(message = 'text is empty after normalization') {
    super(message);
    this.name = 'EmptyInputError';
  }
}
