/* tslint:disable */
/* eslint-disable */

/**
 * A fitted pair of models over one synthetic corpus.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Draws `n` points and fits both binnings with `bins` per axis.
     */
    constructor(n: number, bins: number, spread: number, seed: number);
    /**
     * One valence slice of the occupancy grid as a JSON matrix.
     */
    slice(kind: string, valence_token: number): string;
    /**
     * Boundaries, coverage and entropy of both binnings plus scatter points, as JSON.
     */
    summary(): string;
    /**
     * Tokens and bin centers of one point under both binnings, as JSON.
     */
    tokenize(a: number, d: number, v: number): string;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly demo_slice: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_summary: (a: number) => [number, number];
    readonly demo_tokenize: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
