import json

from django.core.management.base import CommandError

from preferences.services.dpomath import DpoBatch, gradient_check, reward_stats, salv_dpo_loss
from rtl.management.base import SalvkitCommand


class Command(SalvkitCommand):
    help = "Evaluate the signal-masked DPO loss on one batch and check its gradient."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--batch", required=True, help="JSON file with the DpoBatch fields.")
        parser.add_argument("--beta", type=float, default=None, help="Override the batch's beta.")
        parser.add_argument("--json", action="store_true")

    def handle(self, *args, **options):
        with self.toolkit_errors():
            try:
                with open(options["batch"], "r", encoding="utf-8") as f:
                    data = json.load(f)
            except json.JSONDecodeError as e:
                raise CommandError(f"{options['batch']} is not valid JSON: {e}", returncode=1) from e
            if options["beta"] is not None:
                data["beta"] = options["beta"]
            batch = DpoBatch.from_json(data)
            loss, margin = salv_dpo_loss(batch)
            stats = reward_stats(batch)
            fd_error = gradient_check(batch)

        result = {
            "loss": loss,
            "margin": margin,
            "chosen_reward": stats.chosen_reward,
            "rejected_reward": stats.rejected_reward,
            "reward_accurate": stats.accurate,
            "max_gradient_error": fd_error,
        }
        if options["json"]:
            self.emit_json(result)
            return
        self.stdout.write(f"loss:               {loss:.12g}")
        self.stdout.write(f"margin:             {margin:.12g}")
        self.stdout.write(f"rewards (w / l):    {stats.chosen_reward:.6g} / {stats.rejected_reward:.6g}")
        self.stdout.write(f"max gradient error: {fd_error:.3e}")
