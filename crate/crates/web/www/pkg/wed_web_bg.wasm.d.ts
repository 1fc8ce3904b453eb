/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_field_free: (a: number, b: number) => void;
export const causal_sweep_csv: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const field_nodes: (a: number) => [number, number];
export const field_reference: (a: number) => [number, number];
export const field_summary: (a: number) => [number, number];
export const field_times: (a: number) => [number, number];
export const field_values: (a: number) => [number, number];
export const minimize_wed: (a: number, b: number, c: number, d: number) => [number, number, number];
export const preset: (a: number, b: number) => [number, number];
export const reference_flow: (a: number, b: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
