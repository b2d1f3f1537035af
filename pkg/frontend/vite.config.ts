import { defineConfig } from "vitest/config";

// The dev server proxies /v1/ to a running `stylefit serve` instance so the
// page can be developed against a real result directory.
export default defineConfig({
  server: {
    proxy: {
      "/v1": "http://127.0.0.1:8631",
    },
  },
  test: {
    environment: "jsdom",
    include: ["test/**/*.test.ts"],
  },
});
