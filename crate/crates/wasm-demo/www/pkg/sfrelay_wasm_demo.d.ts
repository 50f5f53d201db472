/* tslint:disable */
/* eslint-disable */

/**
 * The full relay chain with the bundled model, codes and images.
 */
export class Relay {
    free(): void;
    [Symbol.dispose](): void;
    globalIters(): number;
    imageNames(): string[];
    constructor();
    /**
     * Runs one trial and keeps every per-iteration reconstruction.
     */
    simulate(image: number, snr_db: number, rho: number, seed: bigint): Trial;
}

export class Trial {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Independent-decoding ED after the same LDPC budget as each global iteration.
     */
    edIndependent(): Float64Array;
    edJoint(): Float64Array;
    edSemantic(): Float64Array;
    /**
     * RGBA pixels (96x96) of `kind` ("original", "joint", "semantic" or
     * "independent") after global iteration `iter`.
     */
    image(kind: string, iter: number): Uint8Array;
}

/**
 * Samples the correlation update on `points` evenly spaced LLRs in `[-l_max, l_max]`.
 */
export function fc_curve(rho: number, l_max: number, points: number): Float64Array;

/**
 * `[I(X;Y), H(X|U), I(Y;U), H(X|U,V), I(Y;U|V)]` for the binary model.
 */
export function rate_bounds(rho: number, q: number, delta: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_relay_free: (a: number, b: number) => void;
    readonly __wbg_trial_free: (a: number, b: number) => void;
    readonly fc_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly rate_bounds: (a: number, b: number, c: number) => [number, number, number, number];
    readonly relay_globalIters: (a: number) => number;
    readonly relay_imageNames: (a: number) => [number, number];
    readonly relay_new: () => [number, number, number];
    readonly relay_simulate: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
    readonly trial_edIndependent: (a: number) => [number, number];
    readonly trial_edJoint: (a: number) => [number, number];
    readonly trial_edSemantic: (a: number) => [number, number];
    readonly trial_image: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_drop_slice: (a: number, b: number) => void;
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
