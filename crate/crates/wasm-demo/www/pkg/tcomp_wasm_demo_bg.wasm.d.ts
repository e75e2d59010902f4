/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_completion_free: (a: number, b: number) => void;
export const complete: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const completion_converged: (a: number) => number;
export const completion_distance_from_init: (a: number) => [number, number];
export const completion_dp_init: (a: number) => number;
export const completion_gradient_norm: (a: number) => [number, number];
export const completion_init_rel_error: (a: number) => number;
export const completion_n: (a: number) => number;
export const completion_objective: (a: number) => [number, number];
export const completion_rel_error: (a: number) => number;
export const completion_success: (a: number) => number;
export const init_error: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const trim: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
