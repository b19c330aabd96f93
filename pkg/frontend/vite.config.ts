/// <reference types="vitest/config" />
import { defineConfig } from 'vite';

export default defineConfig({
  build: {
    outDir: 'dist',
  },
  server: {
    // dev server proxies API calls to a locally running review service
    proxy: {
      '/api': 'http://127.0.0.1:8710',
    },
  },
  test: {
    environment: 'jsdom',
  },
});
