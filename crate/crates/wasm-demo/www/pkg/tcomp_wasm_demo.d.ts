/* tslint:disable */
/* eslint-disable */

/**
 * Result of [`complete`]: the per-iteration trace and the final numbers.
 */
export class Completion {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly converged: boolean;
    readonly distance_from_init: Float64Array;
    readonly dp_init: number;
    readonly gradient_norm: Float64Array;
    readonly init_rel_error: number;
    readonly n: number;
    readonly objective: Float64Array;
    readonly rel_error: number;
    readonly success: boolean;
}

export function complete(d: number, r: number, alpha: number, seed: number, max_iterations: number): Completion;

export function init_error(d: number, r: number, alphas: Float64Array, seeds: number): Float64Array;

export function trim(d: number, r: number, spike: number, mu0: number, seed: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_completion_free: (a: number, b: number) => void;
    readonly complete: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly completion_converged: (a: number) => number;
    readonly completion_distance_from_init: (a: number) => [number, number];
    readonly completion_dp_init: (a: number) => number;
    readonly completion_gradient_norm: (a: number) => [number, number];
    readonly completion_init_rel_error: (a: number) => number;
    readonly completion_n: (a: number) => number;
    readonly completion_objective: (a: number) => [number, number];
    readonly completion_rel_error: (a: number) => number;
    readonly completion_success: (a: number) => number;
    readonly init_error: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly trim: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
