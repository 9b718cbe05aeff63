/* tslint:disable */
/* eslint-disable */

/**
 * Rows `[E, lower bound, best sine strategy within E]` for dimension `d`.
 */
export function bound_vs_sine(d: number, e_max: number, points: number): Float64Array;

/**
 * Global energy of the single-qubit gate `exp(−i a σ/2)`, `axis` one of
 * `x`, `y`, `z`, or `h` for the Hadamard gate (angle ignored).
 */
export function gate_energy(axis: string, angle: number): number;

/**
 * `[Hadamard E, C₁ E_loc, C₁ E_gl, C₂ E_ind, C₂ E_sh]`.
 */
export function hadamard_battery_constants(): Float64Array;

/**
 * Rows `[E, closed form, see-saw]` for the qubit phase channel; the see-saw
 * column is `NaN` when `optimize` is false.
 */
export function qubit_cost_curve(e_max: number, points: number, optimize: boolean): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bound_vs_sine: (a: number, b: number, c: number) => [number, number, number, number];
    readonly gate_energy: (a: number, b: number, c: number) => [number, number, number];
    readonly hadamard_battery_constants: () => [number, number, number, number];
    readonly qubit_cost_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
