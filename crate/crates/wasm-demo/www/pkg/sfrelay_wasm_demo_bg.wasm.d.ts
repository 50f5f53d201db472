/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_relay_free: (a: number, b: number) => void;
export const __wbg_trial_free: (a: number, b: number) => void;
export const fc_curve: (a: number, b: number, c: number) => [number, number, number, number];
export const rate_bounds: (a: number, b: number, c: number) => [number, number, number, number];
export const relay_globalIters: (a: number) => number;
export const relay_imageNames: (a: number) => [number, number];
export const relay_new: () => [number, number, number];
export const relay_simulate: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
export const trial_edIndependent: (a: number) => [number, number];
export const trial_edJoint: (a: number) => [number, number];
export const trial_edSemantic: (a: number) => [number, number];
export const trial_image: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
