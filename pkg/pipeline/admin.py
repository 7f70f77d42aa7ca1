from django.contrib import admin
from .models import PipelineRun, PipelineEvent


@admin.register(PipelineRun)
class PipelineRunAdmin(admin.ModelAdmin):
    list_display = (
        'id',
        'status',
        'started_at',
        'finished_at',
        'prompts',
        'prompts_failed',
        'pairs',
        'short_hash',
    )
    list_filter = (
        'status',
        'started_at',
    )
    search_fields = (
        'content_hash',
    )
    date_hierarchy = 'started_at'
    ordering = ('-started_at',)

    def short_hash(self, obj):
        return obj.content_hash[:12]

    short_hash.short_description = 'Content hash'


@admin.register(PipelineEvent)
class PipelineEventAdmin(admin.ModelAdmin):
    list_display = (
        'run',
        'timestamp',
        'level',
        'short_message',
    )
    list_filter = (
        'level',
        'run__status',
    )
    list_select_related = ('run',)
    search_fields = (
        'message',
        'run__content_hash',
    )
    date_hierarchy = 'timestamp'
    ordering = ('-timestamp',)

    def short_message(self, obj):
        return (obj.message[:75] + '...') if len(obj.message) > 75 else obj.message

    short_message.short_description = 'Message'
