/* tslint:disable */
/* eslint-disable */

/**
 * Space-time field on the interior nodes, row `m` holding `u(t_m)`.
 */
export class Field {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    nodes(): Float64Array;
    /**
     * Reference flow on the same grid, empty when not computed.
     */
    reference(): Float64Array;
    summary(): string;
    times(): Float64Array;
    /**
     * Row-major `(M + 1) x N` values.
     */
    values(): Float64Array;
}

/**
 * Sweep CSV over `sweep.epsilons` (comma-separated override if non-empty).
 */
export function causal_sweep_csv(config: string, epsilons: string): string;

/**
 * Minimizer at `epsilon`, `lambda`, together with the reference flow.
 */
export function minimize_wed(config: string, epsilon: number, lambda: number): Field;

/**
 * Shipped instance file text, or an empty string for unknown names.
 */
export function preset(name: string): string;

/**
 * Implicit Euler reference flow.
 */
export function reference_flow(config: string): Field;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_field_free: (a: number, b: number) => void;
    readonly causal_sweep_csv: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly field_nodes: (a: number) => [number, number];
    readonly field_reference: (a: number) => [number, number];
    readonly field_summary: (a: number) => [number, number];
    readonly field_times: (a: number) => [number, number];
    readonly field_values: (a: number) => [number, number];
    readonly minimize_wed: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly preset: (a: number, b: number) => [number, number];
    readonly reference_flow: (a: number, b: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
