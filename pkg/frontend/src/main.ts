import { ApiClient, HealthResponse } from "./api.js";
import { ChatStore } from "./state.js";
import { mountApp } from "./view.js";

const root = document.getElementById("app");
if (root) {
  const client = new ApiClient();
  const store = new ChatStore(client);
  client
    .health()
    .catch((): HealthResponse | null => null)
    .then((health) => mountApp(root, store, health));
}
