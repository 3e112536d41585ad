/* tslint:disable */
/* eslint-disable */

export function latency_vs_ratio(input_mb: number, gigacycles: number, uplink_mbps: number, cn_ghz: number, es_share: number, twin_pct: number, points: number): string;

export function play_game(n_ues: number, n_cns: number, seed: bigint, gain: number): string;

export function urllc_rate_curve(bandwidth_hz: number, blocklength: number, eps: number, snr_db_lo: number, snr_db_hi: number, points: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly latency_vs_ratio: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly play_game: (a: number, b: number, c: bigint, d: number) => [number, number];
    readonly urllc_rate_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
