/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_comparison_free: (a: number, b: number) => void;
export const comparison_after: (a: number) => [number, number];
export const comparison_before: (a: number) => [number, number];
export const comparison_differingPixels: (a: number) => number;
export const comparison_optimized: (a: number) => [number, number];
export const comparison_report: (a: number) => [number, number];
export const example: (a: number, b: number, c: bigint) => [number, number, number, number];
export const exampleNames: () => [number, number];
export const optimize: (a: number, b: number, c: number, d: number) => [number, number, number];
export const render: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
