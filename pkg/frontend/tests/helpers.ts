/**
 * Test harness: spawns the real assessment service (mock provider) as a
 * subprocess and generates synthetic clips with the package's own writer,
 * so the frontend is exercised against the genuine HTTP surface.
 */

import { ChildProcess, execFileSync, spawn } from 'node:child_process';
import { mkdtempSync, readFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

export interface ServiceHandle {
  baseUrl: string;
  workdir: string;
  stop(): Promise<number | null>;
}

export async function startService(): Promise<ServiceHandle> {
  const workdir = mkdtempSync(join(tmpdir(), 'vidaas-fe-'));
  const proc: ChildProcess = spawn('python3', [
    '-m', 'vidaas.cli', 'serve',
    '--listen', '127.0.0.1:0',
    '--archive', join(workdir, 'archive.sqlite'),
    '--provider', 'mock',
  ], { stdio: ['ignore', 'pipe', 'pipe'] });

  const baseUrl = await new Promise<string>((resolve, reject) => {
    let buffer = '';
    const timer = setTimeout(() => reject(new Error('service did not start')), 30_000);
    proc.stdout!.on('data', (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/listening on (http:\/\/[\d.]+:\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]);
      }
    });
    proc.on('exit', (code) => {
      clearTimeout(timer);
      reject(new Error(`service exited early with code ${code}`));
    });
  });

  for (let attempt = 0; attempt < 200; attempt += 1) {
    try {
      const resp = await fetch(`${baseUrl}/v1/health`);
      if (resp.ok) break;
    } catch {
      await sleep(50);
    }
  }

  return {
    baseUrl,
    workdir,
    stop: () =>
      new Promise((resolve) => {
        proc.on('exit', (code) => resolve(code));
        proc.kill('SIGINT');
        setTimeout(() => proc.kill('SIGKILL'), 10_000).unref();
      }),
  };
}

export function makeClip(dir: string, name: string, frames = 120,
                         withAudio = true): Uint8Array {
  const path = join(dir, name);
  execFileSync('python3', ['-c',
    'import sys; from vidaas import synth; ' +
    `synth.write_clip(sys.argv[1], frame_count=${frames}, fps=10.0, ` +
    `with_audio=${withAudio ? 'True' : 'False'})`,
    path]);
  return new Uint8Array(readFileSync(path));
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export async function waitFor(cond: () => boolean, timeoutMs = 60_000,
                              what = 'condition'): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!cond()) {
    if (Date.now() > deadline) {
      throw new Error(`timed out waiting for ${what}`);
    }
    await sleep(25);
  }
}
