/* tslint:disable */
/* eslint-disable */

export class Comparison {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly after: Uint8Array;
    readonly before: Uint8Array;
    readonly differingPixels: number;
    /**
     * The optimized program as skp-lite text.
     */
    readonly optimized: string;
    /**
     * JSON with firings, cost metrics and the image diff.
     */
    readonly report: string;
}

/**
 * Pretty-printed skp-lite text of a named example.
 */
export function example(name: string, seed: bigint): string;

export function exampleNames(): string[];

/**
 * Optimizes a document and renders it before and after.
 */
export function optimize(doc: string, width: number, height: number): Comparison;

/**
 * Rasterizes a skp-lite document to RGBA8 bytes, row-major.
 */
export function render(doc: string, width: number, height: number): Uint8Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_comparison_free: (a: number, b: number) => void;
    readonly comparison_after: (a: number) => [number, number];
    readonly comparison_before: (a: number) => [number, number];
    readonly comparison_differingPixels: (a: number) => number;
    readonly comparison_optimized: (a: number) => [number, number];
    readonly comparison_report: (a: number) => [number, number];
    readonly example: (a: number, b: number, c: bigint) => [number, number, number, number];
    readonly exampleNames: () => [number, number];
    readonly optimize: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly render: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_drop_slice: (a: number, b: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
