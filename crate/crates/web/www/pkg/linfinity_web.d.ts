/* tslint:disable */
/* eslint-disable */

/**
 * Eigenvalues, unit eigenvectors and case-C margin of the origin.
 */
export function eigenvalues(alpha: number, beta: number, gamma: number): string;

/**
 * Rows `[r, closed_form, numeric]` of the averaged flux.
 */
export function flux(start: number, stop: number, step: number, w_b: number): string;

/**
 * Backward probe from `(x0, -alpha, delta)` in the blown-up chart.
 */
export function probe(alpha: number, beta: number, gamma: number, x0: number, delta: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly eigenvalues: (a: number, b: number, c: number) => [number, number, number, number];
    readonly flux: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly probe: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
