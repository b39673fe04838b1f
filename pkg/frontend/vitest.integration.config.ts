import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    environmentOptions: {
      happyDOM: {
        settings: {
          fetch: {
            // the suite talks to the locally spawned engine on another port
            disableSameOriginPolicy: true,
          },
        },
      },
    },
    include: ["tests/integration.test.ts"],
    globalSetup: ["scripts/integration-setup.ts"],
    testTimeout: 30000,
    hookTimeout: 60000,
  },
});
