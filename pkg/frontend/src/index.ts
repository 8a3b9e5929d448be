export { BoundTokenizer, load } from './tokenizer.js';
export { makeInstances } from './instances.js';
export { pythonExecutable } from './cli.js';
export {
  CliError,
  EmptyInputError,
  type InstanceConfig,
  type InstanceRecord,
  type InstanceRun,
  type LatticeRecord,
  type LatticeTokenRecord,
} from './types.js';
