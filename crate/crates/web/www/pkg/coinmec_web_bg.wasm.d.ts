/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const latency_vs_ratio: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
export const play_game: (a: number, b: number, c: bigint, d: number) => [number, number];
export const urllc_rate_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
